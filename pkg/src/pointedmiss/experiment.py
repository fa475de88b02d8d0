"""Nested cross-validated comparison of imputation strategies and embeddings.

For every outer fold the moments, imputation statistics and whitening map
are fitted on the outer training part only.  Each (strategy, embedding)
cell then grid-searches ``(C, D)`` by inner cross-validation on the whitened
training subspaces, refits on the whole outer training part and scores the
outer test part.

``no_information`` uses the whitened imputed basepoints alone (linear
kernel); ``subspace`` adds ``D`` times the projector overlap of the whitened
free directions.  The basepoint Gram is shared by both, so it is computed
once per cell and the overlap matrix once per strategy.

Grid ties break toward smaller ``C``, then smaller ``D``.
"""

from __future__ import annotations

import io
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .core import Dataset
from .data import apply_missingness, load_csv
from .errors import ConfigError, DataError, PointedMissError
from .impute import STRATEGIES, ImputationStrategy
from .kernel import basepoint_matrix, overlap_matrix
from .moments import estimate_moments
from .svm import SmoConfig, predict, train
from .transform import apply_affine, whitening_map

log = logging.getLogger(__name__)

EMBEDDINGS = ("no_information", "subspace")
MISSINGNESS = ("asis", "random", "structural")
THREADS_ENV = "POINTEDMISS_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str | None = None
    label_column: str | int = -1
    drop_columns: tuple = ()
    missing_markers: tuple = ("", "NA", "?")
    header: bool = True
    missingness: str = "asis"
    fraction: float = 0.9
    seed: int = 0
    strategies: tuple = STRATEGIES
    embeddings: tuple = EMBEDDINGS
    c_grid: tuple = (0.01, 0.1, 1.0, 10.0)
    d_grid: tuple = tuple(2.0 ** -k for k in range(11))
    outer_folds: int = 5
    inner_folds: int = 5
    moments_method: str = "em"
    em_max_iterations: int = 200
    em_tolerance: float = 1e-6
    kkt_tolerance: float = 1e-3
    threads: int | None = None

    def __post_init__(self):
        strategies = tuple(s.replace("-", "_") for s in self.strategies)
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "embeddings", tuple(self.embeddings))
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        object.__setattr__(self, "d_grid", tuple(float(d) for d in self.d_grid))
        if self.missingness not in MISSINGNESS:
            raise ConfigError(f"missingness must be one of {MISSINGNESS}")
        if self.missingness != "asis" and not 0.0 < self.fraction < 1.0:
            raise ConfigError("fraction must lie in (0, 1)")
        if not strategies or set(strategies) - set(STRATEGIES):
            raise ConfigError(f"strategies must be a non-empty subset of {STRATEGIES}")
        if not self.embeddings or set(self.embeddings) - set(EMBEDDINGS):
            raise ConfigError(f"embeddings must be a non-empty subset of {EMBEDDINGS}")
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ConfigError("c_grid must be non-empty and positive")
        if not self.d_grid or any(not 0 <= d <= 1 for d in self.d_grid):
            raise ConfigError("d_grid must be non-empty and within [0, 1]")
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ConfigError("fold counts must be at least 2")
        if self.moments_method not in ("em", "available_case"):
            raise ConfigError("moments_method must be 'em' or 'available_case'")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")


@dataclass
class CellResult:
    strategy: str
    embedding: str
    accuracies: list = field(default_factory=list)
    chosen_c: list = field(default_factory=list)
    chosen_d: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


@dataclass
class Report:
    results: list
    runtime: float = 0.0
    info: dict = field(default_factory=dict)

    def get(self, strategy: str, embedding: str) -> CellResult:
        for r in self.results:
            if r.strategy == strategy and r.embedding == embedding:
                return r
        raise KeyError((strategy, embedding))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("strategy,embedding,mean,std,chosen_C_per_fold,chosen_D_per_fold\n")
        for r in self.results:
            cs = ";".join(f"{c:g}" for c in r.chosen_c)
            ds = ";".join(f"{d:g}" for d in r.chosen_d)
            out.write(f"{r.strategy},{r.embedding},{r.mean:.6f},{r.std:.6f},{cs},{ds}\n")
        return out.getvalue()

    def to_text(self) -> str:
        strategies = list(dict.fromkeys(r.strategy for r in self.results))
        embeddings = list(dict.fromkeys(r.embedding for r in self.results))
        width = max(len(s) for s in strategies + ["strategy"]) + 2
        lines = ["embedding".ljust(16) + "".join(s.rjust(max(width, 16)) for s in strategies)]
        for e in embeddings:
            row = e.ljust(16)
            for s in strategies:
                r = self.get(s, e)
                row += f"{r.mean:.2f} +- {r.std:.2f}".rjust(max(width, 16))
            lines.append(row)
        lines.append(f"runtime: {self.runtime:.1f} s")
        for key in ("missing_fraction", "guarded_records", "dropped_rows"):
            if key in self.info:
                lines.append(f"{key}: {self.info[key]}")
        return "\n".join(lines) + "\n"


def resolve_threads(requested: int | None) -> int:
    cap = os.environ.get(THREADS_ENV)
    threads = requested or (int(cap) if cap else 1)
    if cap:
        threads = min(threads, int(cap))
    return max(threads, 1)


def _cell_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def _select(base, overlap, y, inner, c_grid, d_values, kkt, seed_keys):
    """Best (C, D) by mean inner validation accuracy."""
    scores = []
    for ci, c in enumerate(c_grid):
        for di, d in enumerate(d_values):
            k = base if d == 0 else base + d * overlap
            accs = []
            for fi, (tr, va) in enumerate(inner):
                model = train(k[np.ix_(tr, tr)], y[tr], c,
                              SmoConfig(kkt, seed=_cell_seed(*seed_keys, ci, di, fi)))
                pred, _ = predict(model, k[np.ix_(va, tr)])
                accs.append(np.mean(pred == y[va]))
            scores.append((round(float(np.mean(accs)), 12), c, d))
    return min(scores, key=lambda s: (-s[0], s[1], s[2]))


def _run_fold(fold, train_idx, test_idx, data: Dataset, config: ExperimentConfig, fit_hook):
    train_data = data.subset(train_idx)
    test_data = data.subset(test_idx)
    y = train_data.labels.astype(float)
    y_test = test_data.labels.astype(float)

    def fitted(stage):
        if fit_hook is not None:
            fit_hook(stage, fold, np.asarray(train_idx))

    fitted("moments")
    moments = estimate_moments(
        train_data, config.moments_method,
        **({"max_iterations": config.em_max_iterations, "tolerance": config.em_tolerance}
           if config.moments_method == "em" else {}),
    )
    fitted("whitening")
    whiten = whitening_map(moments)
    inner = list(
        StratifiedKFold(config.inner_folds, shuffle=True,
                        random_state=_cell_seed(config.seed, fold, 7919) % (2 ** 32))
        .split(np.zeros(len(y)), y)
    )

    results = {}
    for si, strategy in enumerate(config.strategies):
        try:
            fitted(f"imputation:{strategy}")
            imputer = ImputationStrategy.fit(strategy, train_data, moments)
            s_train = [apply_affine(whiten, imputer.apply(r)) for r in train_data.records]
            s_test = [apply_affine(whiten, imputer.apply(r)) for r in test_data.records]
        except PointedMissError as exc:
            exc.args = (f"[fold {fold}, strategy {strategy}] {exc}",)
            raise
        base = basepoint_matrix(s_train, s_train)
        base_test = basepoint_matrix(s_test, s_train)
        if "subspace" in config.embeddings:
            overlap = overlap_matrix(s_train, s_train)
            overlap_test = overlap_matrix(s_test, s_train)
        for ei, embedding in enumerate(config.embeddings):
            subspace = embedding == "subspace"
            d_values = config.d_grid if subspace else (0.0,)
            _, c, d = _select(
                base, overlap if subspace else None, y, inner, config.c_grid, d_values,
                config.kkt_tolerance, (config.seed, fold, si, ei),
            )
            k = base if d == 0 else base + d * overlap
            kt = base_test if d == 0 else base_test + d * overlap_test
            model = train(k, y, c, SmoConfig(config.kkt_tolerance,
                                            seed=_cell_seed(config.seed, fold, si, ei)))
            pred, _ = predict(model, kt)
            results[(strategy, embedding)] = (float(np.mean(pred == y_test)), c, d)
    return results


def run_experiment(config: ExperimentConfig, data: Dataset | None = None, fit_hook=None) -> Report:
    """Run the double cross-validation protocol.

    ``data`` overrides ``config.dataset_path``.  ``fit_hook(stage, fold,
    indices)`` is called whenever a statistic is fitted, with the record
    indices it was fitted on.
    """
    start = time.perf_counter()
    if data is None:
        if config.dataset_path is None:
            raise ConfigError("no dataset given")
        data = load_csv(config.dataset_path, config.missing_markers, config.label_column,
                        config.drop_columns, config.header)
    if data.labels is None:
        raise DataError("experiment needs labelled data")
    data = apply_missingness(data, config.missingness, config.fraction, config.seed)

    outer = list(
        StratifiedKFold(config.outer_folds, shuffle=True, random_state=config.seed % (2 ** 32))
        .split(np.zeros(len(data)), data.labels)
    )
    jobs = [(fold, tr, te) for fold, (tr, te) in enumerate(outer)]
    threads = resolve_threads(config.threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_fold = list(pool.map(lambda j: _run_fold(*j, data, config, fit_hook), jobs))
    else:
        per_fold = [_run_fold(*j, data, config, fit_hook) for j in jobs]

    results = []
    for strategy in config.strategies:
        for embedding in config.embeddings:
            cell = CellResult(strategy, embedding)
            for fold_result in per_fold:
                acc, c, d = fold_result[(strategy, embedding)]
                cell.accuracies.append(acc)
                cell.chosen_c.append(c)
                cell.chosen_d.append(d)
            results.append(cell)

    info = {
        "missing_fraction": round(data.missing_fraction(), 6),
        "guarded_records": data.info.get("guarded_records", 0),
        "dropped_rows": data.info.get("dropped_rows", 0),
        "records": len(data),
        "threads": threads,
    }
    runtime = time.perf_counter() - start
    log.info("experiment finished in %.1f s", runtime)
    return Report(results, runtime, info)
