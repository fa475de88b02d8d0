"""Incomplete data as pointed affine subspaces.

Records with missing attributes become ``basepoint + span(free directions)``,
are imputed, whitened or projected as sets, embedded as basepoint plus
projection matrix, and classified with an SVM on the D-weighted product
``<x, y> + D <p_V, p_W>``.
"""

from .core import (
    AffineSubspace,
    Dataset,
    IncompleteRecord,
    PointedSubspace,
    contains,
    orthonormalize,
    project,
    projection_matrix,
    subspace_from_record,
)
from .experiment import ExperimentConfig, Report, run_experiment
from .impute import (
    ImputationStrategy,
    impute_mean,
    impute_median,
    impute_most_probable,
    impute_zero,
)
from .kernel import (
    EmbeddedPoint,
    FlagPair,
    GramMatrix,
    KernelConfig,
    cross_gram,
    dot,
    embed,
    flag_dot,
    gram,
)
from .moments import EmConfig, Moments, available_case_moments, em_moments, estimate_moments
from .svm import SmoConfig, SvmModel, predict, train
from .transform import AffineMap, apply_affine, intersect_constraint, pca_map, whitening_map

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "AffineSubspace",
    "Dataset",
    "EmConfig",
    "EmbeddedPoint",
    "ExperimentConfig",
    "FlagPair",
    "GramMatrix",
    "ImputationStrategy",
    "IncompleteRecord",
    "KernelConfig",
    "Moments",
    "PointedSubspace",
    "Report",
    "SmoConfig",
    "SvmModel",
    "apply_affine",
    "available_case_moments",
    "contains",
    "cross_gram",
    "dot",
    "em_moments",
    "estimate_moments",
    "embed",
    "flag_dot",
    "gram",
    "impute_mean",
    "impute_median",
    "impute_most_probable",
    "impute_zero",
    "intersect_constraint",
    "orthonormalize",
    "pca_map",
    "predict",
    "project",
    "projection_matrix",
    "run_experiment",
    "subspace_from_record",
    "train",
    "whitening_map",
]
