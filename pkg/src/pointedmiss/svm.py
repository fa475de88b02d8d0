"""Binary soft-margin SVM on a precomputed kernel, trained by SMO.

The solver works on the dual

    max_a  sum(a) - 1/2 a^T Q a,   Q_ij = y_i y_j K_ij,
    s.t.   0 <= a_i <= C,  sum(a_i y_i) = 0

and at every step updates the maximal violating pair.  It stops once the
violation gap is below ``kkt_tolerance``, which bounds the KKT residual
``|y_i f(x_i) - 1|`` of every free support vector by the same amount.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numba
import numpy as np

from .errors import DimensionMismatch, NotConvergedWarning, SingleClass
from .kernel import GramMatrix, KernelConfig

TAU = 1e-12


@dataclass(frozen=True)
class SmoConfig:
    kkt_tolerance: float = 1e-3
    max_passes: int = 10000
    seed: int = 0
    record_objective: bool = False

    def __post_init__(self):
        if not self.kkt_tolerance > 0:
            raise ValueError("kkt_tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


@dataclass(frozen=True, eq=False)
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    support_indices: np.ndarray
    c_param: float
    kernel_config: KernelConfig
    iterations: int = 0
    converged: bool = True
    dual_objective: float = float("nan")
    objective_history: np.ndarray | None = None

    @property
    def coef(self) -> np.ndarray:
        """``alpha_i * y_i`` for every training point."""
        return self.alphas * self.labels

    def compact(self) -> "SvmModel":
        """Model restricted to its support vectors (columns of later kernel rows must match)."""
        idx = self.support_indices
        return replace(
            self,
            alphas=self.alphas[idx],
            labels=self.labels[idx],
            support_indices=np.arange(idx.size),
            objective_history=None,
        )

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "labels": self.labels.astype(int).tolist(),
            "support_indices": self.support_indices.astype(int).tolist(),
            "C": self.c_param,
            "D": self.kernel_config.d_weight,
            "iterations": self.iterations,
            "converged": self.converged,
            "dual_objective": self.dual_objective,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            np.asarray(d["alphas"], dtype=float),
            float(d["bias"]),
            np.asarray(d["labels"], dtype=float),
            np.asarray(d["support_indices"], dtype=int),
            float(d["C"]),
            KernelConfig(float(d["D"])),
            int(d.get("iterations", 0)),
            bool(d.get("converged", True)),
            float(d.get("dual_objective", float("nan"))),
        )


@numba.njit(cache=True, nogil=True)
def _smo(k, y, c, eps, max_iter, order, record):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    history = np.empty(max_iter + 1 if record else 1)
    if record:
        history[0] = 0.0
    it = 0
    converged = False
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for p in range(n):
            t = order[p]
            v = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < c) or (y[t] < 0 and alpha[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] < 0 and alpha[t] < c) or (y[t] > 0 and alpha[t] > 0):
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0 or gmax - gmin < eps:
            converged = True
            break
        qii = k[i, i]
        qjj = k[j, j]
        qij = y[i] * y[j] * k[i, j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        if y[i] != y[j]:
            quad = qii + qjj + 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = c - diff
            else:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = c + diff
        else:
            quad = qii + qjj - 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i] = c
                    alpha[j] = total - c
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > c:
                if alpha[j] > c:
                    alpha[j] = c
                    alpha[i] = total - c
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        di = alpha[i] - ai_old
        dj = alpha[j] - aj_old
        for t in range(n):
            grad[t] += y[t] * (y[i] * k[t, i] * di + y[j] * k[t, j] * dj)
        it += 1
        if record:
            obj = 0.0
            for t in range(n):
                obj += alpha[t] * (grad[t] - 1.0)
            history[it] = -0.5 * obj
    return alpha, grad, it, converged, history[: it + 1] if record else history[:0]


def _bias(alpha, grad, y, c):
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if np.any(free):
        return -float(np.mean(yg[free]))
    at_upper = alpha >= c
    at_lower = alpha <= 0
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if np.any(ub_mask) else np.inf
    lb = yg[lb_mask].max() if np.any(lb_mask) else -np.inf
    if not np.isfinite(ub):
        ub = lb
    if not np.isfinite(lb):
        lb = ub
    return -0.5 * float(ub + lb)


def train(gram: GramMatrix | np.ndarray, labels, c: float, config: SmoConfig | None = None) -> SvmModel:
    """Fit dual coefficients and bias for a precomputed Gram matrix.

    ``labels`` must contain both -1 and +1.  If the iteration cap is hit the
    current iterate is returned with ``converged=False`` and a
    :class:`NotConvergedWarning`.
    """
    config = config or SmoConfig()
    kernel_config = gram.config if isinstance(gram, GramMatrix) else KernelConfig(0.0)
    k = np.ascontiguousarray(gram.entries if isinstance(gram, GramMatrix) else gram, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = y.size
    if k.shape != (n, n):
        raise DimensionMismatch(f"gram {k.shape} does not match {n} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise SingleClass("training labels contain a single class")
    if not c > 0:
        raise ValueError("C must be positive")

    order = np.random.default_rng(config.seed).permutation(n)
    max_iter = config.max_passes * n
    alpha, grad, it, converged, history = _smo(
        k, y, float(c), float(config.kkt_tolerance), max_iter, order, config.record_objective
    )
    if not converged:
        warnings.warn(
            f"SMO hit the iteration cap ({max_iter}) before reaching tolerance",
            NotConvergedWarning,
            stacklevel=2,
        )
    alpha = np.clip(alpha, 0.0, c)
    bias = _bias(alpha, grad, y, c)
    support = np.flatnonzero(alpha > 0)
    dual = float(alpha.sum() - 0.5 * (alpha * y) @ k @ (alpha * y))
    return SvmModel(
        alpha,
        bias,
        y,
        support,
        float(c),
        kernel_config,
        int(it),
        bool(converged),
        dual,
        np.asarray(history) if config.record_objective else None,
    )


def decision_function(model: SvmModel, kernel_rows) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    if rows.shape[1] != model.alphas.size:
        raise DimensionMismatch(
            f"kernel rows have {rows.shape[1]} columns, model expects {model.alphas.size}"
        )
    return rows @ model.coef + model.bias


def predict(model: SvmModel, kernel_rows) -> tuple[np.ndarray, np.ndarray]:
    """Labels (ties go to +1) and decision values for rows of ``K(test, train)``."""
    values = decision_function(model, kernel_rows)
    return np.where(values >= 0, 1, -1), values


def dual_objective(k, labels, alphas) -> float:
    ay = np.asarray(alphas) * np.asarray(labels)
    return float(np.sum(alphas) - 0.5 * ay @ np.asarray(k) @ ay)
