"""Exception hierarchy.

The three top-level families map onto CLI exit codes: configuration
problems exit with 2, bad input data with 3 and numerical failures with 4.
"""


class PointedMissError(Exception):
    exit_code = 1


class ConfigError(PointedMissError, ValueError):
    exit_code = 2


class DataError(PointedMissError, ValueError):
    exit_code = 3


class NumericalError(PointedMissError, ArithmeticError):
    exit_code = 4


class DimensionMismatch(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonNumericCell(ParseError):
    pass


class CoordinateNeverObserved(DataError):
    def __init__(self, index):
        super().__init__(f"coordinate {index} is never observed")
        self.index = index


class NonCanonicalSubspace(DataError):
    """Mean/median imputation requested for a subspace that is not a coordinate mask."""


class BasepointOutsideConstraint(DataError):
    pass


class NotTwoDimensional(DataError):
    pass


class SingleClass(DataError):
    pass


class InvalidK(ConfigError):
    pass


class TargetUnreachable(DataError):
    pass


class SingularConditioning(NumericalError):
    pass


class SingularGram(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class NotConvergedWarning(RuntimeWarning):
    """An iterative solver stopped at its iteration cap; the best iterate is returned."""
