"""Scalar products between pointed subspaces.

``<x + V, y + W>_D = <x, y> + D <p_V, p_W>`` where ``<p_V, p_W>`` is the
Frobenius product of the orthogonal projectors.  It equals
``sum_{j,k} <v_j, w_k>^2 = ||B_V^T B_W||_F^2`` for orthonormal bases, which is
what the Gram routines compute; the explicit projector form is kept in
:func:`projector_product` for checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PointedSubspace, projection_matrix
from .errors import DimensionMismatch


@dataclass(frozen=True)
class KernelConfig:
    d_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.d_weight <= 1.0:
            raise ValueError(f"d_weight must lie in [0, 1], got {self.d_weight}")


@dataclass(frozen=True, eq=False)
class EmbeddedPoint:
    basepoint: np.ndarray
    scaled_projection: np.ndarray

    def dot(self, other: "EmbeddedPoint") -> float:
        return float(self.basepoint @ other.basepoint) + float(
            np.sum(self.scaled_projection * other.scaled_projection)
        )


@dataclass(frozen=True, eq=False)
class FlagPair:
    """Filled vector joined with the 0/1 indicator of missing coordinates."""

    filled: np.ndarray
    flags: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags)
        if not np.all((flags == 0) | (flags == 1)):
            raise ValueError("flags must be 0/1")
        object.__setattr__(self, "filled", np.asarray(self.filled, dtype=float))
        object.__setattr__(self, "flags", flags.astype(float))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    config: KernelConfig

    def __len__(self):
        return self.entries.shape[0]


def _config(config) -> KernelConfig:
    if config is None:
        return KernelConfig()
    if isinstance(config, KernelConfig):
        return config
    return KernelConfig(float(config))


def embed(s: PointedSubspace, config: KernelConfig | float | None = None) -> EmbeddedPoint:
    config = _config(config)
    return EmbeddedPoint(s.basepoint, np.sqrt(config.d_weight) * projection_matrix(s.basis))


def projector_product(a: PointedSubspace, b: PointedSubspace) -> float:
    """``<p_V, p_W>`` summed term by term as ``tr((v v^T)^T (w w^T))``."""
    total = 0.0
    for j in range(a.rank):
        pv = np.outer(a.basis[:, j], a.basis[:, j])
        for k in range(b.rank):
            pw = np.outer(b.basis[:, k], b.basis[:, k])
            total += np.trace(pv.T @ pw)
    return float(total)


def subspace_overlap(a: PointedSubspace, b: PointedSubspace) -> float:
    """``||B_a^T B_b||_F^2``, the projector product from the bases."""
    m = a.basis.T @ b.basis
    return float(np.sum(m * m))


def dot(a: PointedSubspace, b: PointedSubspace, config: KernelConfig | float | None = None) -> float:
    config = _config(config)
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"dimensions {a.dimension} and {b.dimension} differ")
    value = float(a.basepoint @ b.basepoint)
    if config.d_weight:
        value += config.d_weight * subspace_overlap(a, b)
    return value


def flag_dot(a: FlagPair, b: FlagPair) -> float:
    if a.filled.shape != b.filled.shape or a.flags.shape != b.flags.shape:
        raise DimensionMismatch("flag pairs differ in length")
    return float(a.filled @ b.filled) + float(a.flags @ b.flags)


def overlap_matrix(rows: Sequence[PointedSubspace], cols: Sequence[PointedSubspace]) -> np.ndarray:
    """Matrix of ``||B_i^T B_j||_F^2`` for every row/column pair.

    Uses the bases directly when the subspaces are thin; when they are close
    to full rank, flattened projectors make one matrix product cheaper.
    """
    rows, cols = list(rows), list(cols)
    out = np.zeros((len(rows), len(cols)))
    if not rows or not cols:
        return out
    if rows[0].dimension != cols[0].dimension:
        raise DimensionMismatch("row and column subspaces differ in dimension")
    n = rows[0].dimension
    wr = np.array([s.rank for s in rows])
    wc = np.array([s.rank for s in cols])
    if not wr.any() or not wc.any():
        return out
    basis_cost = n * wr.sum() * wc.sum()
    projector_cost = len(rows) * len(cols) * n * n + n * n * (wr.sum() + wc.sum())
    if basis_cost <= projector_cost:
        cb = np.hstack([s.basis for s in cols])
        starts = np.concatenate([[0], np.cumsum(wc)[:-1]])
        nonempty = wc > 0
        for i, s in enumerate(rows):
            if s.rank == 0:
                continue
            m = s.basis.T @ cb
            colsum = np.sum(m * m, axis=0)
            out[i, nonempty] = np.add.reduceat(colsum, starts[nonempty])
        return out
    pr = np.stack([(s.basis @ s.basis.T).ravel() for s in rows])
    pc = np.stack([(s.basis @ s.basis.T).ravel() for s in cols])
    return pr @ pc.T


def basepoint_matrix(rows: Sequence[PointedSubspace], cols: Sequence[PointedSubspace]) -> np.ndarray:
    if not len(rows) or not len(cols):
        return np.zeros((len(rows), len(cols)))
    xr = np.stack([s.basepoint for s in rows])
    xc = np.stack([s.basepoint for s in cols])
    if xr.shape[1] != xc.shape[1]:
        raise DimensionMismatch("row and column subspaces differ in dimension")
    return xr @ xc.T


def gram(points: Sequence[PointedSubspace], config: KernelConfig | float | None = None) -> GramMatrix:
    config = _config(config)
    points = list(points)
    k = basepoint_matrix(points, points)
    if config.d_weight and points:
        k = k + config.d_weight * overlap_matrix(points, points)
    k = 0.5 * (k + k.T)
    return GramMatrix(k, config)


def cross_gram(train: Sequence[PointedSubspace], test: Sequence[PointedSubspace],
               config: KernelConfig | float | None = None) -> np.ndarray:
    """Rows indexed by ``test``, columns by ``train``."""
    config = _config(config)
    train, test = list(train), list(test)
    if not test:
        return np.zeros((0, len(train)))
    k = basepoint_matrix(test, train)
    if config.d_weight and train:
        k = k + config.d_weight * overlap_matrix(test, train)
    return k
