"""Incomplete records and pointed affine subspaces.

A record ``(x, J)`` with missing coordinates ``J`` is the pointed affine
subspace ``x + span(e_j : j in J)``.  Every subspace carries an explicit
column-orthonormal basis so that canonical masks and subspaces produced by
affine maps share one representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

ORTHONORMAL_ATOL = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IncompleteRecord:
    """Raw feature vector plus observed flags; missing slots hold 0."""

    values: np.ndarray
    observed: np.ndarray
    label: int | None = None

    def __post_init__(self):
        observed = _frozen(self.observed, dtype=bool)
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.shape != observed.shape:
            raise DimensionMismatch(
                f"values {values.shape} and observed {observed.shape} differ"
            )
        values[~observed] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)

    @classmethod
    def from_array(cls, x, label=None):
        """Build a record from a vector where NaN marks a missing value."""
        x = np.asarray(x, dtype=float)
        observed = ~np.isnan(x)
        return cls(np.where(observed, x, 0.0), observed, label)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    @property
    def missing(self) -> np.ndarray:
        return np.flatnonzero(~self.observed)


@dataclass(frozen=True, eq=False)
class PointedSubspace:
    """Affine set ``basepoint + span(basis)`` with a distinguished basepoint.

    ``basis`` is an ``N x n`` matrix with orthonormal columns, ``n`` may be 0.
    """

    basepoint: np.ndarray
    basis: np.ndarray
    label: int | None = None

    def __post_init__(self):
        x = _frozen(self.basepoint)
        if x.ndim != 1:
            raise DimensionMismatch("basepoint must be a vector")
        basis = np.array(self.basis, dtype=float)
        if basis.size == 0:
            basis = np.zeros((x.shape[0], 0))
        if basis.ndim != 2 or basis.shape[0] != x.shape[0]:
            raise DimensionMismatch(
                f"basis shape {basis.shape} does not match dimension {x.shape[0]}"
            )
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), rtol=0.0, atol=ORTHONORMAL_ATOL):
            raise ValueError("basis columns are not orthonormal")
        basis.setflags(write=False)
        object.__setattr__(self, "basepoint", x)
        object.__setattr__(self, "basis", basis)

    @property
    def dimension(self) -> int:
        """Ambient dimension N."""
        return self.basepoint.shape[0]

    @property
    def rank(self) -> int:
        """Dimension of the linear part."""
        return self.basis.shape[1]

    def with_basepoint(self, basepoint) -> "PointedSubspace":
        return PointedSubspace(basepoint, self.basis, self.label)

    def canonical_mask(self) -> np.ndarray | None:
        """Boolean mask of free coordinates if the basis is a set of canonical vectors.

        Returns None for a general subspace.
        """
        b = self.basis
        mask = np.zeros(self.dimension, dtype=bool)
        if b.shape[1] == 0:
            return mask
        rows = np.argmax(np.abs(b), axis=0)
        if np.any(np.diff(rows) <= 0):
            return None
        expected = np.zeros_like(b)
        expected[rows, np.arange(b.shape[1])] = 1.0
        if not np.allclose(b, expected, rtol=0.0, atol=1e-12):
            return None
        mask[rows] = True
        return mask


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """Unpointed affine constraint ``anchor + span(basis)``."""

    anchor: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        s = PointedSubspace(self.anchor, self.basis)
        object.__setattr__(self, "anchor", s.basepoint)
        object.__setattr__(self, "basis", s.basis)

    @property
    def dimension(self) -> int:
        return self.anchor.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Incomplete data matrix.

    ``values`` is ``n_records x N`` with zeros in missing slots, ``observed``
    the matching boolean mask.  ``labels`` are +-1 class tags or None.
    ``info`` carries loader/generator bookkeeping (dropped rows, guards).
    """

    values: np.ndarray
    observed: np.ndarray
    labels: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        observed = np.array(self.observed, dtype=bool)
        if values.ndim != 2 or values.shape != observed.shape:
            raise DimensionMismatch(
                f"values {values.shape} and observed {observed.shape} differ"
            )
        values[~observed] = 0.0
        values.setflags(write=False)
        observed.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)
        if self.labels is not None:
            labels = _frozen(self.labels, dtype=int)
            if labels.shape != (values.shape[0],):
                raise DimensionMismatch("one label per record required")
            object.__setattr__(self, "labels", labels)
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != values.shape[1]:
                raise DimensionMismatch("one feature name per column required")
            object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_records(cls, records: Sequence[IncompleteRecord], feature_names=None, dimension=None):
        if not records:
            if dimension is None:
                raise ValueError("dimension required for an empty dataset")
            return cls(np.zeros((0, dimension)), np.zeros((0, dimension), bool))
        dims = {r.dimension for r in records}
        if len(dims) != 1:
            raise DimensionMismatch(f"records have differing dimensions {sorted(dims)}")
        labels = [r.label for r in records]
        return cls(
            np.stack([r.values for r in records]),
            np.stack([r.observed for r in records]),
            None if any(l is None for l in labels) else np.array(labels),
            feature_names,
        )

    @classmethod
    def from_array(cls, x, labels=None, feature_names=None):
        """Build from a float matrix where NaN marks missing cells."""
        x = np.asarray(x, dtype=float)
        observed = ~np.isnan(x)
        return cls(np.where(observed, x, 0.0), observed, labels, feature_names)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def records(self) -> list[IncompleteRecord]:
        labels = self.labels if self.labels is not None else [None] * len(self)
        return [
            IncompleteRecord(v, o, None if l is None else int(l))
            for v, o, l in zip(self.values, self.observed, labels)
        ]

    def to_array(self) -> np.ndarray:
        """Values with NaN in missing cells."""
        return np.where(self.observed, self.values, np.nan)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.values[index],
            self.observed[index],
            None if self.labels is None else self.labels[index],
            self.feature_names,
            dict(self.info),
        )

    def missing_fraction(self) -> float:
        return float(1.0 - self.observed.mean()) if self.observed.size else 0.0


def subspace_from_record(record: IncompleteRecord) -> PointedSubspace:
    """``values + span(e_j)`` over missing ``j`` in ascending order; missing slots zeroed."""
    missing = record.missing
    basis = np.zeros((record.dimension, missing.size))
    basis[missing, np.arange(missing.size)] = 1.0
    return PointedSubspace(np.where(record.observed, record.values, 0.0), basis, record.label)


def subspaces_from_dataset(data: Dataset) -> list[PointedSubspace]:
    return [subspace_from_record(r) for r in data.records]


def orthonormalize(vectors, tol: float | None = None, dimension: int | None = None) -> np.ndarray:
    """Orthonormal basis for the span of ``vectors``.

    Modified Gram-Schmidt with a second orthogonalization pass.  A vector
    whose residual norm after removing the current span is ``<= tol`` is
    dropped, so the output may have fewer columns than inputs.  ``tol``
    defaults to ``1e-10 * max(input norms)``.

    ``vectors`` is either a sequence of 1-D vectors or an ``N x k`` matrix
    whose columns are the vectors.  Returns an ``N x r`` array.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = [vectors[:, j] for j in range(vectors.shape[1])]
        dimension = vectors.shape[0]
    else:
        cols = [np.asarray(v, dtype=float) for v in vectors]
        if cols:
            dims = {c.shape for c in cols}
            if len(dims) != 1:
                raise DimensionMismatch("vectors have differing lengths")
            dimension = cols[0].shape[0]
    if dimension is None:
        raise ValueError("dimension required for an empty vector list")
    if not cols:
        return np.zeros((dimension, 0))

    norms = [float(np.linalg.norm(c)) for c in cols]
    if tol is None:
        tol = 1e-10 * max(norms)
    out: list[np.ndarray] = []
    for c in cols:
        r = np.array(c, dtype=float)
        for _ in range(2):
            for q in out:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol and nr > 0.0:
            out.append(r / nr)
    if not out:
        return np.zeros((dimension, 0))
    return np.column_stack(out)


def projection_matrix(basis) -> np.ndarray:
    """Orthogonal projector ``sum_j v_j v_j^T`` onto the span of the columns."""
    basis = np.asarray(basis, dtype=float)
    p = basis @ basis.T
    return 0.5 * (p + p.T)


def project(basis, y) -> np.ndarray:
    """Orthogonal projection of ``y`` onto ``span(basis)``."""
    basis = np.asarray(basis, dtype=float)
    y = np.asarray(y, dtype=float)
    if basis.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"basis dimension {basis.shape[0]} vs vector {y.shape[0]}")
    return basis @ (basis.T @ y)


def contains(subspace: PointedSubspace, point, tol: float = 1e-8) -> bool:
    point = np.asarray(point, dtype=float)
    if point.shape != subspace.basepoint.shape:
        raise DimensionMismatch("point and subspace dimensions differ")
    d = point - subspace.basepoint
    return bool(np.linalg.norm(d - project(subspace.basis, d)) <= tol)

