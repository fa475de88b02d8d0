"""JSON files for pointed subspaces, moments and trained models.

Subspace file::

    {"format": "pointedmiss-subspaces", "dimension": N,
     "subspaces": [{"basepoint": [...], "basis": [[column], ...], "label": 1}, ...]}

``basis`` lists the orthonormal basis as columns (each of length N).

Model file::

    {"format": "pointedmiss-model", "version": 1,
     "strategy": "most_probable", "fill": [...] | null,
     "moments": {...}, "affine_map": {"matrix": [[...]], "offset": [...]},
     "svm": {"alphas", "bias", "labels", "support_indices", "C", "D", ...},
     "support_vectors": [<subspace>, ...]}

The SVM part is compacted to support vectors; ``support_vectors`` holds the
transformed training subspaces they refer to, in the same order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PointedSubspace
from .errors import ParseError
from .impute import ImputationStrategy
from .moments import Moments
from .svm import SvmModel
from .transform import AffineMap

SUBSPACES_FORMAT = "pointedmiss-subspaces"
MODEL_FORMAT = "pointedmiss-model"


def subspace_to_dict(s: PointedSubspace) -> dict:
    d = {"basepoint": s.basepoint.tolist(), "basis": s.basis.T.tolist()}
    if s.label is not None:
        d["label"] = int(s.label)
    return d


def subspace_from_dict(d: dict, dimension: int | None = None) -> PointedSubspace:
    x = np.asarray(d["basepoint"], dtype=float)
    cols = d.get("basis") or []
    basis = np.asarray(cols, dtype=float).T if cols else np.zeros((x.size, 0))
    if dimension is not None and x.size != dimension:
        raise ParseError(f"basepoint of length {x.size}, expected {dimension}")
    return PointedSubspace(x, basis, d.get("label"))


def dump_subspaces(subspaces, path):
    subspaces = list(subspaces)
    doc = {
        "format": SUBSPACES_FORMAT,
        "dimension": subspaces[0].dimension if subspaces else 0,
        "subspaces": [subspace_to_dict(s) for s in subspaces],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _read_json(path, expected_format):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", row=exc.lineno) from exc
    if doc.get("format") != expected_format:
        raise ParseError(f"{path}: expected a {expected_format} document")
    return doc


def load_subspaces(path) -> list[PointedSubspace]:
    doc = _read_json(path, SUBSPACES_FORMAT)
    return [subspace_from_dict(d, doc.get("dimension")) for d in doc["subspaces"]]


def dump_moments(moments: Moments, path):
    Path(path).write_text(json.dumps({"format": "pointedmiss-moments", **moments.to_dict()}, indent=1) + "\n")


def load_moments(path) -> Moments:
    return Moments.from_dict(_read_json(path, "pointedmiss-moments"))


@dataclass(frozen=True, eq=False)
class TrainedPipeline:
    """Everything needed to score new records: imputation, map, SVM, support vectors."""

    imputer: ImputationStrategy
    affine_map: AffineMap
    model: SvmModel
    support_vectors: list

    def to_dict(self) -> dict:
        fill = self.imputer.fill
        return {
            "format": MODEL_FORMAT,
            "version": 1,
            "strategy": self.imputer.kind,
            "fill": None if fill is None else [None if np.isnan(v) else float(v) for v in fill],
            "moments": None if self.imputer.moments is None else self.imputer.moments.to_dict(),
            "affine_map": self.affine_map.to_dict(),
            "svm": self.model.to_dict(),
            "support_vectors": [subspace_to_dict(s) for s in self.support_vectors],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedPipeline":
        moments = None if doc.get("moments") is None else Moments.from_dict(doc["moments"])
        fill = doc.get("fill")
        if fill is not None:
            fill = np.array([np.nan if v is None else v for v in fill], dtype=float)
        imputer = ImputationStrategy(doc["strategy"], moments, fill)
        return cls(
            imputer,
            AffineMap.from_dict(doc["affine_map"]),
            SvmModel.from_dict(doc["svm"]),
            [subspace_from_dict(d) for d in doc["support_vectors"]],
        )

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "TrainedPipeline":
        return cls.from_dict(_read_json(path, MODEL_FORMAT))
