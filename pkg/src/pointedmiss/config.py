"""``key = value`` experiment configuration files with section headers.

Recognised keys (all optional except ``data.path``)::

    [data]
    path = breast-cancer.csv
    label_column = class          ; name or 0-based index, default: last column
    drop_columns = id             ; comma separated names or indices
    missing_markers = ,NA,?       ; comma separated; an empty item means empty cells
    header = true

    [missingness]
    kind = structural             ; asis | random | structural
    fraction = 0.9
    seed = 0

    [experiment]
    strategies = zero, mean, median, most-probable
    embeddings = no_information, subspace
    c_grid = 0.01, 0.1, 1, 10
    d_grid = 1, 0.5, 0.25          ; default 2^-k for k = 0..10
    outer_folds = 5
    inner_folds = 5
    moments = em                  ; em | available_case
    em_max_iterations = 200
    em_tolerance = 1e-6
    kkt_tolerance = 1e-3
    threads = 1
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError
from .experiment import ExperimentConfig


def _column(value: str):
    value = value.strip()
    try:
        return int(value)
    except ValueError:
        return value


def _list(value: str):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _floats(value: str):
    try:
        return tuple(float(v) for v in _list(value))
    except ValueError as exc:
        raise ConfigError(f"not a list of numbers: {value!r}") from exc


KNOWN = {
    "data": {"path", "label_column", "drop_columns", "missing_markers", "header"},
    "missingness": {"kind", "fraction", "seed"},
    "experiment": {"strategies", "embeddings", "c_grid", "d_grid", "outer_folds", "inner_folds",
                   "moments", "em_max_iterations", "em_tolerance", "kkt_tolerance", "threads", "seed"},
}


def load_config(path, **overrides) -> ExperimentConfig:
    """Parse a config file into an :class:`ExperimentConfig`.

    Relative data paths resolve against the config file's directory.
    Keyword ``overrides`` replace parsed fields when not None.
    """
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    for section in parser.sections():
        if section not in KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - KNOWN[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    kw = {}
    try:
        if parser.has_section("data"):
            d = parser["data"]
            if "path" in d:
                p = Path(d["path"])
                kw["dataset_path"] = str(p if p.is_absolute() else path.parent / p)
            if "label_column" in d:
                kw["label_column"] = _column(d["label_column"])
            if "drop_columns" in d:
                kw["drop_columns"] = tuple(_column(c) for c in _list(d["drop_columns"]))
            if "missing_markers" in d:
                kw["missing_markers"] = tuple(m.strip() for m in d["missing_markers"].split(","))
            if "header" in d:
                kw["header"] = d.getboolean("header")
        if parser.has_section("missingness"):
            m = parser["missingness"]
            if "kind" in m:
                kw["missingness"] = m["kind"].strip()
            if "fraction" in m:
                kw["fraction"] = m.getfloat("fraction")
            if "seed" in m:
                kw["seed"] = m.getint("seed")
        if parser.has_section("experiment"):
            e = parser["experiment"]
            if "strategies" in e:
                kw["strategies"] = _list(e["strategies"])
            if "embeddings" in e:
                kw["embeddings"] = _list(e["embeddings"])
            if "c_grid" in e:
                kw["c_grid"] = _floats(e["c_grid"])
            if "d_grid" in e:
                kw["d_grid"] = _floats(e["d_grid"])
            for key in ("outer_folds", "inner_folds", "em_max_iterations", "threads", "seed"):
                if key in e:
                    kw[key] = e.getint(key)
            for key in ("em_tolerance", "kkt_tolerance"):
                if key in e:
                    kw[key] = e.getfloat(key)
            if "moments" in e:
                kw["moments_method"] = e["moments"].strip().replace("-", "_")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
