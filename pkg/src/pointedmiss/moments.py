"""Mean and covariance estimation for data with missing cells.

Two estimators are provided:

* :func:`available_case_moments` -- per-coordinate means and pairwise
  covariances over the records observing each pair (``/(count - 1)``),
  repaired to positive definiteness by eigenvalue clipping.
* :func:`em_moments` -- maximum-likelihood EM for a multivariate normal
  (``/n`` convention) with a ridge added to the covariance in every M-step.

With a ridge ``eps`` the EM iteration is exactly the EM for the penalized
objective ``loglik - n/2 * eps * tr(Sigma^-1)``, so that objective is the one
guaranteed to be non-decreasing; both it and the plain observed-data
log-likelihood are recorded.

Records are put in a canonical order before any summation so results do
not depend on record order.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .core import Dataset
from .errors import CoordinateNeverObserved, NumericalError, SingularConditioning

log = logging.getLogger(__name__)

SOURCES = ("available_case", "em", "exact")


@dataclass(frozen=True, eq=False)
class Moments:
    mean: np.ndarray
    covariance: np.ndarray
    source: str = "exact"
    ridge: float = 0.0
    sparse_pairs: tuple = ()
    loglik_history: tuple = ()
    penalized_history: tuple = ()
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown moments source {self.source!r}")
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dimension(self) -> int:
        return self.mean.size

    @cached_property
    def cholesky(self):
        try:
            return linalg.cho_factor(self.covariance, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalError("covariance is not positive definite") from exc

    @cached_property
    def precision(self) -> np.ndarray:
        p = linalg.cho_solve(self.cholesky, np.eye(self.dimension))
        return 0.5 * (p + p.T)

    @cached_property
    def eigh(self):
        return np.linalg.eigh(self.covariance)

    def mahalanobis(self, a, b=None) -> np.ndarray:
        """Mahalanobis norm of rows of ``a - b`` (or of ``a - mean``)."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        d = a - (self.mean if b is None else np.asarray(b, dtype=float))
        z = linalg.solve_triangular(self.cholesky[0], d.T, lower=True)
        return np.sqrt(np.sum(z * z, axis=0))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "source": self.source,
            "ridge": self.ridge,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Moments":
        return cls(
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["covariance"], dtype=float),
            d.get("source", "exact"),
            float(d.get("ridge", 0.0)),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", True)),
        )


@dataclass(frozen=True)
class EmConfig:
    max_iterations: int = 500
    tolerance: float = 1e-8
    ridge: float | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError("ridge must be non-negative")


def default_ridge(covariance) -> float:
    """``1e-6`` times the mean variance, or ``1e-6`` if that is zero."""
    scale = float(np.mean(np.diag(covariance))) if np.size(covariance) else 0.0
    return 1e-6 * scale if scale > 0 else 1e-6


def clip_spectrum(covariance, floor: float) -> np.ndarray:
    """Symmetrize and raise every eigenvalue to at least ``floor``."""
    s = 0.5 * (covariance + covariance.T)
    w, v = np.linalg.eigh(s)
    if w.min() >= floor:
        return s
    w = np.maximum(w, floor)
    s = (v * w) @ v.T
    return 0.5 * (s + s.T)


def _canonical_order(values, observed):
    keys = [values[:, j] for j in reversed(range(values.shape[1]))]
    keys += [observed[:, j] for j in reversed(range(observed.shape[1]))]
    return np.lexsort(keys) if values.shape[0] else np.arange(0)


def _check_observed(observed):
    counts = observed.sum(axis=0)
    never = np.flatnonzero(counts == 0)
    if never.size:
        raise CoordinateNeverObserved(int(never[0]))
    return counts


def sample_moments(x, ridge: float | None = None, ddof: int = 1) -> Moments:
    """Moments of a complete data matrix (rows are records)."""
    x = np.asarray(x, dtype=float)
    x = x[_canonical_order(x, np.ones_like(x, dtype=bool))]
    mean = x.mean(axis=0)
    c = x - mean
    denom = max(x.shape[0] - ddof, 1)
    cov = c.T @ c / denom
    ridge = default_ridge(cov) if ridge is None else ridge
    return Moments(mean, clip_spectrum(cov, ridge), "exact", ridge)


def available_case_moments(data: Dataset, ridge: float | None = None) -> Moments:
    """Available-case mean and pairwise covariance.

    Pairs observed together in fewer than two records get covariance 0 and
    are listed in ``sparse_pairs`` (a warning is logged).
    """
    order = _canonical_order(data.values, data.observed)
    x = data.values[order]
    o = data.observed[order].astype(float)
    counts = _check_observed(data.observed)
    mean = (x * o).sum(axis=0) / counts

    # centring by the coordinate means keeps the one-pass pairwise formula accurate
    xc = (x - mean) * o
    n_ij = o.T @ o
    s_i = xc.T @ o  # [i, j]: sum of centred x_i over records observing i and j
    s_ij = xc.T @ xc
    with np.errstate(divide="ignore", invalid="ignore"):
        cov = (s_ij - s_i * s_i.T / n_ij) / (n_ij - 1.0)
    sparse = n_ij < 2
    cov[sparse] = 0.0
    sparse_pairs = tuple(
        (int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(sparse)))
    )
    if sparse_pairs:
        log.warning("%d coordinate pairs observed together fewer than twice; covariance set to 0",
                    len(sparse_pairs))
    ridge = default_ridge(cov) if ridge is None else ridge
    return Moments(mean, clip_spectrum(cov, ridge), "available_case", ridge, sparse_pairs)


def _patterns(observed):
    patterns, inverse = np.unique(observed, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    return [(p, np.flatnonzero(inverse == k)) for k, p in enumerate(patterns)]


def _penalty(n, ridge, cov):
    if ridge == 0:
        return 0.0
    return 0.5 * n * ridge * float(np.trace(linalg.cho_solve(linalg.cho_factor(cov), np.eye(cov.shape[0]))))


def _e_step_by_pattern(x, groups, mean, cov):
    """Per-pattern E-step; slower reference for :func:`_e_step`."""
    n_dim = mean.size
    t1 = np.zeros(n_dim)
    t2 = np.zeros((n_dim, n_dim))
    loglik = 0.0
    for pattern, rows in groups:
        obs = np.flatnonzero(pattern)
        mis = np.flatnonzero(~pattern)
        xhat = x[rows].copy()
        if obs.size:
            try:
                f = linalg.cho_factor(cov[np.ix_(obs, obs)], lower=True)
            except linalg.LinAlgError as exc:
                raise SingularConditioning(f"observed block {obs.tolist()} is singular") from exc
            d = x[np.ix_(rows, obs)] - mean[obs]
            z = linalg.solve_triangular(f[0], d.T, lower=True)
            logdet = 2.0 * np.sum(np.log(np.diag(f[0])))
            loglik -= 0.5 * (rows.size * (obs.size * np.log(2 * np.pi) + logdet) + np.sum(z * z))
        if mis.size:
            if obs.size:
                s_mo = cov[np.ix_(mis, obs)]
                gain = linalg.cho_solve(f, s_mo.T).T  # S_mo S_oo^-1
                xhat[:, mis] = mean[mis] + d @ gain.T
                cond = cov[np.ix_(mis, mis)] - gain @ s_mo.T
            else:
                xhat[:, mis] = mean[mis]
                cond = cov[np.ix_(mis, mis)]
        t1 += xhat.sum(axis=0)
        t2 += xhat.T @ xhat
        if mis.size:
            t2[np.ix_(mis, mis)] += rows.size * cond
    return t1, t2, loglik


def _count_groups(observed):
    counts = observed.sum(axis=1)
    return [(int(k), np.flatnonzero(counts == k)) for k in np.unique(counts)]


def _e_step(x, observed, groups, mean, cov):
    """Expected sufficient statistics and the observed-data log-likelihood at (mean, cov).

    Records are batched by their number of observed coordinates so every
    linear solve is a stacked LAPACK call.
    """
    n_dim = mean.size
    t1 = np.zeros(n_dim)
    t2 = np.zeros((n_dim, n_dim))
    loglik = 0.0
    for k, rows in groups:
        xr = x[rows]
        obs = observed[rows]
        miss = (~obs).astype(float)
        if k == 0:
            t1 += rows.size * mean
            t2 += rows.size * (np.outer(mean, mean) + cov)
            continue
        idx = np.nonzero(obs)[1].reshape(rows.size, k)
        s_oo = cov[idx[:, :, None], idx[:, None, :]]
        try:
            chol = np.linalg.cholesky(s_oo)
        except np.linalg.LinAlgError as exc:
            raise SingularConditioning("an observed covariance block is singular") from exc
        d = np.take_along_axis(xr, idx, axis=1) - mean[idx]
        s_on = cov[idx]  # rows of Sigma at the observed coordinates
        sol = np.linalg.solve(s_oo, np.concatenate([d[:, :, None], s_on], axis=2))
        alpha, gain = sol[:, :, 0], sol[:, :, 1:]
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum()
        loglik -= 0.5 * (rows.size * k * np.log(2 * np.pi) + logdet + np.sum(d * alpha))
        xhat = np.where(obs, xr, mean + np.einsum("bkn,bk->bn", s_on, alpha))
        t1 += xhat.sum(axis=0)
        t2 += xhat.T @ xhat
        if k < n_dim:
            # conditional covariance Sigma - Sigma_no Sigma_oo^-1 Sigma_on on the missing block
            t2 += cov * (miss.T @ miss) - np.einsum(
                "bkn,bkm->nm", s_on * miss[:, None, :], gain * miss[:, None, :]
            )
    return t1, t2, loglik


def em_moments(data: Dataset, config: EmConfig | None = None) -> Moments:
    """EM estimate of a multivariate normal's mean and covariance.

    Starts from the available-case estimate.  Stops once the change in the
    penalized log-likelihood drops below ``config.tolerance`` or after
    ``config.max_iterations`` M-steps.
    """
    config = config or EmConfig()
    _check_observed(data.observed)
    order = _canonical_order(data.values, data.observed)
    x = data.values[order]
    observed = data.observed[order]
    n = x.shape[0]

    init = available_case_moments(Dataset(x, observed))
    ridge = default_ridge(init.covariance) if config.ridge is None else config.ridge
    mean = init.mean.copy()
    cov = clip_spectrum(np.array(init.covariance), max(ridge, init.ridge))

    groups = _count_groups(observed)
    t1, t2, ll = _e_step(x, observed, groups, mean, cov)
    pen = ll - _penalty(n, ridge, cov)
    lls, pens = [ll], [pen]
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        mean = t1 / n
        cov = t2 / n - np.outer(mean, mean)
        cov = 0.5 * (cov + cov.T) + ridge * np.eye(mean.size)
        t1, t2, ll = _e_step(x, observed, groups, mean, cov)
        new_pen = ll - _penalty(n, ridge, cov)
        lls.append(ll)
        pens.append(new_pen)
        if new_pen < pen - 1e-8 * (1.0 + abs(pen)):
            warnings.warn(
                f"EM objective decreased at iteration {it}: {pen!r} -> {new_pen!r}",
                RuntimeWarning,
                stacklevel=2,
            )
        done = abs(new_pen - pen) < config.tolerance
        pen = new_pen
        if done:
            converged = True
            break
    if not converged:
        log.info("EM stopped after %d iterations without meeting tolerance", it)
    return Moments(
        mean,
        cov,
        "em",
        ridge,
        init.sparse_pairs,
        tuple(lls),
        tuple(pens),
        it,
        converged,
    )


def estimate_moments(data: Dataset, method: str = "em", ridge: float | None = None, **em_kwargs) -> Moments:
    if method == "em":
        return em_moments(data, EmConfig(ridge=ridge, **em_kwargs))
    if method == "available_case":
        return available_case_moments(data, ridge)
    raise ValueError(f"unknown moments method {method!r}")
