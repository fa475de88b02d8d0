"""Affine maps acting on pointed subspaces.

``f(x + V) = (A x + b) + A V``: the basepoint is mapped as a point and the
image of an orthonormal basis of ``V`` is re-orthonormalized, which may
lower the rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineSubspace, PointedSubspace, orthonormalize, projection_matrix, project
from .errors import BasepointOutsideConstraint, DimensionMismatch, InvalidK
from .moments import Moments


@dataclass(frozen=True, eq=False)
class AffineMap:
    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        b = np.array(self.offset, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise DimensionMismatch(f"matrix {a.shape} and offset {b.shape} are inconsistent")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", b)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n), np.zeros(n))

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x) -> np.ndarray:
        """Map a point, or every row of a matrix of points."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatch(f"map expects dimension {self.in_dim}, got {x.shape[-1]}")
        return x @ self.matrix.T + self.offset

    def then(self, other: "AffineMap") -> "AffineMap":
        """Composition ``other . self``."""
        if other.in_dim != self.out_dim:
            raise DimensionMismatch("maps cannot be composed")
        return AffineMap(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "offset": self.offset.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "AffineMap":
        return cls(np.asarray(d["matrix"], dtype=float).reshape(len(d["offset"]), -1), d["offset"])


def compose(g: AffineMap, f: AffineMap) -> AffineMap:
    """``g . f``."""
    return f.then(g)


def apply_affine(f: AffineMap, s: PointedSubspace, tol: float | None = None) -> PointedSubspace:
    if f.in_dim != s.dimension:
        raise DimensionMismatch(f"map expects dimension {f.in_dim}, subspace has {s.dimension}")
    image = f.matrix @ s.basis
    if tol is None and s.rank:
        # rank tolerance relative to the map's scale, so a collapsed direction is dropped
        tol = 1e-10 * max(np.linalg.norm(f.matrix, 2), 1e-300)
    basis = orthonormalize(image, tol=tol, dimension=f.out_dim)
    return PointedSubspace(f(s.basepoint), basis, s.label)


def whitening_map(moments: Moments) -> AffineMap:
    """``x -> Sigma^-1/2 (x - m)`` with the symmetric inverse square root."""
    w, v = moments.eigh
    inv_sqrt = (v / np.sqrt(w)) @ v.T
    inv_sqrt = 0.5 * (inv_sqrt + inv_sqrt.T)
    return AffineMap(inv_sqrt, -inv_sqrt @ moments.mean)


def principal_axes(moments: Moments, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` eigenvalues and unit eigenvectors (columns) of the covariance.

    Order is by descending eigenvalue, ties keep the solver's order.  Each
    eigenvector is signed so its largest-magnitude entry is positive.
    """
    n = moments.dimension
    if not 1 <= k <= n:
        raise InvalidK(f"k must lie in [1, {n}], got {k}")
    w, v = moments.eigh
    order = np.argsort(-w, kind="stable")[:k]
    w, v = w[order], v[:, order].copy()
    for j in range(k):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    return w, v


def pca_map(moments: Moments, k: int) -> AffineMap:
    """``x -> W^T (x - m)`` onto the ``k`` leading principal axes."""
    _, w = principal_axes(moments, k)
    return AffineMap(w.T, -w.T @ moments.mean)


def intersect_constraint(s: PointedSubspace, w: AffineSubspace, tol: float | None = None) -> PointedSubspace:
    """Restrict ``s`` to the affine constraint ``w``.

    The basepoint must already satisfy the constraint.  The new linear part
    is ``V`` intersected with the direction space of ``w``, found as the
    null space of ``[(I - P_V); (I - P_W)]``.
    """
    if s.dimension != w.dimension:
        raise DimensionMismatch("subspace and constraint dimensions differ")
    n = s.dimension
    tol = 1e-8 * n if tol is None else tol
    d = s.basepoint - w.anchor
    if np.linalg.norm(d - project(w.basis, d)) > tol:
        raise BasepointOutsideConstraint("basepoint does not satisfy the constraint")
    eye = np.eye(n)
    stacked = np.vstack([eye - projection_matrix(s.basis), eye - projection_matrix(w.basis)])
    _, sv, vt = np.linalg.svd(stacked)
    null = vt[sv <= tol].T
    basis = orthonormalize(null, dimension=n) if null.shape[1] else np.zeros((n, 0))
    return PointedSubspace(s.basepoint, basis, s.label)
