"""CSV ingestion, missingness generators and synthetic benchmarks."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from pathlib import Path

import numpy as np

from .core import Dataset
from .errors import DataError, NonNumericCell, ParseError, TargetUnreachable
from .moments import sample_moments

log = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS = frozenset({"", "NA", "?"})


def load_csv(path, missing_markers=DEFAULT_MISSING_MARKERS, label_column=-1,
             drop_columns=(), header=True) -> Dataset:
    """Read a rectangular CSV into a :class:`Dataset`.

    Cells equal to a marker (after stripping whitespace) or parsing to NaN are
    missing.  The label column is reduced to its two most frequent classes:
    the most frequent becomes -1, the runner-up +1 (count ties broken by the
    label text).  Other rows are dropped and counted in ``info["dropped_rows"]``.

    ``label_column`` and entries of ``drop_columns`` are header names or
    integer positions; ``label_column=None`` loads unlabelled data.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows or (header and len(rows) < 2):
        raise ParseError(f"{path} contains no data rows")
    if header:
        names = [c.strip() for c in rows[0]]
        body = rows[1:]
        first_line = 2
    else:
        names = [f"x{j}" for j in range(len(rows[0]))]
        body = rows
        first_line = 1
    width = len(names)

    def column_index(col):
        if isinstance(col, int):
            idx = col if col >= 0 else width + col
            if not 0 <= idx < width:
                raise ParseError(f"column {col} out of range")
            return idx
        if col not in names:
            raise ParseError(f"no column named {col!r}")
        return names.index(col)

    label_idx = None if label_column is None else column_index(label_column)
    dropped = {column_index(c) for c in drop_columns}
    feature_idx = [j for j in range(width) if j != label_idx and j not in dropped]
    markers = {m.strip() for m in missing_markers}

    values = np.zeros((len(body), len(feature_idx)))
    observed = np.zeros((len(body), len(feature_idx)), dtype=bool)
    raw_labels = []
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", row=line)
        for k, j in enumerate(feature_idx):
            cell = row[j].strip()
            if cell in markers:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(f"non-numeric cell {cell!r}", row=line, column=names[j]) from None
            if not math.isnan(v):
                values[i, k] = v
                observed[i, k] = True
        if label_idx is not None:
            raw_labels.append(row[label_idx].strip())

    info = {"source": str(path), "dropped_rows": 0}
    labels = None
    if label_idx is not None:
        counts = Counter(raw_labels)
        if len(counts) < 2:
            raise DataError("label column must contain at least two classes")
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        negative, positive = ranked[0][0], ranked[1][0]
        keep = np.array([l in (negative, positive) for l in raw_labels])
        labels = np.array([1 if l == positive else -1 for l in raw_labels])[keep]
        values, observed = values[keep], observed[keep]
        info["dropped_rows"] = int((~keep).sum())
        info["label_map"] = {negative: -1, positive: 1}
        if info["dropped_rows"]:
            log.info("dropped %d rows outside the two most frequent classes", info["dropped_rows"])
    return Dataset(values, observed, labels, tuple(names[j] for j in feature_idx), info)


def write_csv(data: Dataset, path, marker="NA", label_name="label"):
    """Write a dataset back to CSV with ``marker`` in missing cells."""
    names = data.feature_names or tuple(f"x{j}" for j in range(data.dimension))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ([label_name] if data.labels is not None else []))
        for i in range(len(data)):
            cells = [repr(float(v)) if o else marker for v, o in zip(data.values[i], data.observed[i])]
            if data.labels is not None:
                cells.append(str(int(data.labels[i])))
            w.writerow(cells)


def _guard_empty_rows(observed_before, observed_after, rng):
    """Re-observe one uniformly chosen original feature in rows that lost all of them."""
    after = observed_after.copy()
    empty = np.flatnonzero(~after.any(axis=1) & observed_before.any(axis=1))
    for i in empty:
        candidates = np.flatnonzero(observed_before[i])
        after[i, rng.choice(candidates)] = True
    return after, int(empty.size)


def _with_mask(data: Dataset, observed, info_update) -> Dataset:
    info = dict(data.info)
    info.update(info_update)
    info["missing_fraction"] = float(1.0 - observed.mean()) if observed.size else 0.0
    return Dataset(data.values, observed, data.labels, data.feature_names, info)


def remove_random(data: Dataset, fraction: float, seed: int = 0) -> Dataset:
    """Remove every cell independently with probability ``fraction``.

    Rows left without any feature keep one of their original features; the
    number of such rows is ``info["guarded_records"]``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    drop = rng.random(data.observed.shape) < fraction
    observed, guarded = _guard_empty_rows(data.observed, data.observed & ~drop, rng)
    return _with_mask(data, observed, {"removal": "random", "target_fraction": fraction,
                                       "guarded_records": guarded})


def _expected_removal(t, dist):
    return float(np.mean(np.exp(-t * dist)))


def structural_rate(dist, fraction, tol=1e-6) -> float:
    """Rate ``t`` with ``mean(exp(-t * dist)) == fraction``, by bisection in ``log t``.

    The expected fraction decreases from 1 (``t -> 0``) to the share of
    zero distances (``t -> inf``); a target outside that range raises
    :class:`TargetUnreachable`.
    """
    floor = float(np.mean(dist == 0))
    if not floor < fraction < 1.0:
        raise TargetUnreachable(
            f"target {fraction} outside the reachable range ({floor}, 1)"
        )
    lo, hi = -40.0, 0.0
    while _expected_removal(math.exp(hi), dist) > fraction:
        hi += 5.0
        if hi > 60:
            raise TargetUnreachable(f"cannot push the removal fraction down to {fraction}")
    while _expected_removal(math.exp(lo), dist) < fraction:
        lo -= 10.0
        if lo < -700:
            raise TargetUnreachable(f"cannot raise the removal fraction to {fraction}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = _expected_removal(math.exp(mid), dist)
        if abs(f - fraction) <= tol:
            break
        if f > fraction:
            lo = mid
        else:
            hi = mid
    return math.exp(mid)


def structural_probabilities(data: Dataset, fraction: float, rng):
    """Anchors, rate and per-cell removal probabilities of the structural scheme."""
    if not data.observed.all():
        raise DataError("structural removal needs complete input data")
    n, dim = data.values.shape
    anchors = rng.choice(n, size=dim, replace=n < dim)
    moments = sample_moments(data.values)
    dist = np.column_stack(
        [moments.mahalanobis(data.values, data.values[a]) for a in anchors]
    )
    t = structural_rate(dist, fraction)
    return anchors, t, np.exp(-t * dist)


def remove_structural(data: Dataset, fraction: float, seed: int = 0) -> Dataset:
    """Remove attribute ``i`` of record ``x`` with probability ``exp(-t ||x - x_i||_Sigma)``.

    ``x_i`` is the ``i``-th of ``N`` randomly drawn anchor records and ``t``
    is tuned so the expected removed share equals ``fraction``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    anchors, t, prob = structural_probabilities(data, fraction, rng)
    drop = rng.random(prob.shape) < prob
    observed, guarded = _guard_empty_rows(data.observed, data.observed & ~drop, rng)
    return _with_mask(data, observed, {
        "removal": "structural",
        "target_fraction": fraction,
        "expected_fraction": float(prob.mean()),
        "rate": t,
        "anchors": anchors.tolist(),
        "guarded_records": guarded,
    })


def apply_missingness(data: Dataset, kind: str, fraction: float, seed: int) -> Dataset:
    if kind == "asis":
        return data
    if kind == "random":
        return remove_random(data, fraction, seed)
    if kind == "structural":
        return remove_structural(data, fraction, seed)
    raise ValueError(f"unknown missingness kind {kind!r}")


def two_gaussians(n=300, dim=5, separation=6.0, seed=0) -> Dataset:
    """Two isotropic unit-variance blobs whose means are ``separation`` apart.

    Means sit at ``+-separation/2`` along the diagonal direction; classes are
    balanced (-1 first half, +1 second half).
    """
    rng = np.random.default_rng(seed)
    direction = np.ones(dim) / np.sqrt(dim)
    half = n // 2
    labels = np.r_[-np.ones(half, dtype=int), np.ones(n - half, dtype=int)]
    x = rng.standard_normal((n, dim)) + np.outer(labels, direction) * (separation / 2)
    return Dataset(x, np.ones_like(x, dtype=bool), labels,
                   tuple(f"x{j}" for j in range(dim)), {"source": "two_gaussians"})
