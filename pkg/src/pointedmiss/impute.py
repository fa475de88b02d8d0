"""Basepoint selection for pointed subspaces.

Zero and most-probable imputation are defined for arbitrary subspaces.
Mean and median imputation only make sense for coordinate masks, so they
operate on raw records (or on subspaces whose basis is canonical).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import Dataset, IncompleteRecord, PointedSubspace, project, subspace_from_record
from .errors import CoordinateNeverObserved, NonCanonicalSubspace, SingularGram
from .moments import Moments

STRATEGIES = ("zero", "mean", "median", "most_probable")


def impute_zero(s: PointedSubspace) -> PointedSubspace:
    """Replace the basepoint by its component orthogonal to the free directions."""
    x = s.basepoint
    return s.with_basepoint(x - project(s.basis, x))


def impute_mean(record: IncompleteRecord, moments: Moments) -> PointedSubspace:
    s = subspace_from_record(record)
    return s.with_basepoint(np.where(record.observed, record.values, moments.mean))


def column_medians(data: Dataset) -> np.ndarray:
    """Median of the observed values of every coordinate (even count: mean of the middle two)."""
    med = np.empty(data.dimension)
    for j in range(data.dimension):
        col = data.values[data.observed[:, j], j]
        med[j] = np.median(col) if col.size else np.nan
    return med


def impute_median(record: IncompleteRecord, data: Dataset, medians=None) -> PointedSubspace:
    """Fill missing slots with training medians.

    ``medians`` may be passed in to avoid recomputing them for every record.
    """
    if medians is None:
        medians = column_medians(data)
    missing = record.missing
    bad = missing[np.isnan(medians[missing])]
    if bad.size:
        raise CoordinateNeverObserved(int(bad[0]))
    s = subspace_from_record(record)
    return s.with_basepoint(np.where(record.observed, record.values, medians))


def mahalanobis_projector(basis, precision) -> np.ndarray:
    """``B (B^T P B)^-1 B^T P``: projector onto span(B) orthogonal in the metric ``P``."""
    b = np.asarray(basis, dtype=float)
    if b.shape[1] == 0:
        return np.zeros((b.shape[0], b.shape[0]))
    pb = precision @ b
    try:
        f = linalg.cho_factor(b.T @ pb, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularGram("B^T Sigma^-1 B is singular") from exc
    return b @ linalg.cho_solve(f, pb.T)


def impute_most_probable(s: PointedSubspace, moments: Moments) -> PointedSubspace:
    """Point of ``s`` closest to the mean in Mahalanobis distance.

    The basepoint becomes ``x + B (B^T S^-1 B)^-1 B^T S^-1 (m - x)``.
    """
    if s.rank == 0:
        return s
    x = s.basepoint
    b = s.basis
    pb = moments.precision @ b
    try:
        f = linalg.cho_factor(b.T @ pb, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularGram("B^T Sigma^-1 B is singular") from exc
    t = linalg.cho_solve(f, pb.T @ (moments.mean - x))
    return s.with_basepoint(x + b @ t)


def _as_record(item) -> IncompleteRecord:
    if isinstance(item, IncompleteRecord):
        return item
    mask = item.canonical_mask()
    if mask is None:
        raise NonCanonicalSubspace(
            "mean/median imputation needs a coordinate-mask subspace"
        )
    return IncompleteRecord(item.basepoint, ~mask, item.label)


@dataclass(frozen=True)
class ImputationStrategy:
    """A fitted imputation rule.

    ``fit`` collects whatever training statistics the strategy needs; the
    result is then applied record by record with :meth:`apply`.
    """

    kind: str
    moments: Moments | None = None
    fill: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown imputation strategy {self.kind!r}")
        if self.kind == "most_probable" and self.moments is None:
            raise ValueError("most_probable imputation requires moments")

    @classmethod
    def fit(cls, kind: str, train: Dataset, moments: Moments | None = None) -> "ImputationStrategy":
        kind = kind.replace("-", "_")
        if kind == "mean":
            counts = train.observed.sum(axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                fill = (train.values * train.observed).sum(axis=0) / counts
            return cls(kind, moments, np.where(counts > 0, fill, np.nan))
        if kind == "median":
            return cls(kind, moments, column_medians(train))
        return cls(kind, moments)

    def apply(self, item) -> PointedSubspace:
        if self.kind == "zero":
            s = item if isinstance(item, PointedSubspace) else subspace_from_record(item)
            return impute_zero(s)
        if self.kind == "most_probable":
            s = item if isinstance(item, PointedSubspace) else subspace_from_record(item)
            return impute_most_probable(s, self.moments)
        record = _as_record(item)
        missing = record.missing
        bad = missing[np.isnan(self.fill[missing])]
        if bad.size:
            raise CoordinateNeverObserved(int(bad[0]))
        s = subspace_from_record(record)
        return s.with_basepoint(np.where(record.observed, record.values, self.fill))

    def apply_all(self, data: Dataset) -> list[PointedSubspace]:
        return [self.apply(r) for r in data.records]
