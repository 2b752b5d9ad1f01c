"""Versioned model bundles: JSON files that round-trip bit-for-bit.

A bundle carries everything inference and explanation need: the model payload
with full node statistics (TreeSHAP requires covers and class counts), the
feature schema, the cleansing config, the CSPP thresholds, and training
provenance. Serialization is canonical (sorted keys, compact separators,
shortest-round-trip float repr), so save(load(save(m))) equals save(m) byte
for byte. The field-by-field layout is documented in the README so other
implementations can load these files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cohort import Cohort, FeatureSchema
from .forest import ForestModel
from .logit import LogitModel
from .rules import CsppThresholds
from .tree import TrainConfig, TreeModel

FORMAT_VERSION = 1


class BundleError(ValueError):
    pass


def _tree_to_dict(t: TreeModel) -> dict:
    return {
        "children_left": t.children_left.tolist(),
        "children_right": t.children_right.tolist(),
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "n_samples": t.n_samples.tolist(),
        "class_counts": t.class_counts.tolist(),
        "impurity": t.impurity.tolist(),
    }


def _tree_from_dict(d: dict, n_classes: int, n_features: int, cfg: TrainConfig) -> TreeModel:
    return TreeModel(
        d["children_left"], d["children_right"], d["feature"], d["threshold"],
        d["n_samples"], d["class_counts"], d["impurity"],
        n_classes, n_features, cfg,
    )


def model_to_payload(model) -> tuple[str, dict]:
    if isinstance(model, TreeModel):
        return "tree", {
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "train_config": model.train_config.to_dict(),
            "tree": _tree_to_dict(model),
        }
    if isinstance(model, ForestModel):
        return "forest", {
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "train_config": model.train_config.to_dict(),
            "feature_subsample_size": model.feature_subsample_size,
            "tree_seeds": list(model.tree_seeds),
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, LogitModel):
        return "logit", {
            "feature_names": list(model.feature_names),
            "intercept": model.intercept,
            "coefficients": model.coefficients.tolist(),
            "means": model.means.tolist(),
            "scales": model.scales.tolist(),
        }
    raise BundleError(f"unsupported model type {type(model).__name__}")


def model_from_payload(kind: str, payload: dict):
    if kind == "tree":
        cfg = TrainConfig.from_dict(payload["train_config"])
        return _tree_from_dict(payload["tree"], payload["n_classes"],
                               payload["n_features"], cfg)
    if kind == "forest":
        cfg = TrainConfig.from_dict(payload["train_config"])
        trees = tuple(_tree_from_dict(d, payload["n_classes"], payload["n_features"], cfg)
                      for d in payload["trees"])
        return ForestModel(trees, tuple(payload["tree_seeds"]),
                           payload["feature_subsample_size"],
                           payload["n_classes"], payload["n_features"], cfg)
    if kind == "logit":
        return LogitModel(
            feature_names=tuple(payload["feature_names"]),
            intercept=payload["intercept"],
            coefficients=np.array(payload["coefficients"], dtype=np.float64),
            means=np.array(payload["means"], dtype=np.float64),
            scales=np.array(payload["scales"], dtype=np.float64),
        )
    raise BundleError(f"unknown bundle kind {kind!r}")


def cohort_fingerprint(cohort: Cohort) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(cohort.values).tobytes())
    if cohort.labels is not None:
        h.update(np.ascontiguousarray(cohort.labels).tobytes())
    if cohort.stroke is not None:
        h.update(np.ascontiguousarray(cohort.stroke).tobytes())
    return "sha256:" + h.hexdigest()


@dataclass(frozen=True)
class ModelBundle:
    kind: str
    model: object
    schema: FeatureSchema
    cspp_thresholds: CsppThresholds = CsppThresholds()
    cleanse_config: dict = field(default_factory=dict)
    target_class: int = 1
    provenance: dict = field(default_factory=dict)
    diagnostics: Optional[dict] = None        # logit Wald table, when fitted
    explain_background: Optional[np.ndarray] = None  # rows for exact Shapley

    def to_dict(self) -> dict:
        kind, payload = model_to_payload(self.model)
        if kind != self.kind:
            raise BundleError(f"bundle kind {self.kind!r} does not match model {kind!r}")
        d = {
            "format_version": FORMAT_VERSION,
            "kind": kind,
            "payload": payload,
            "schema": self.schema.to_dict(),
            "cspp_thresholds": self.cspp_thresholds.to_dict(),
            "cleanse_config": self.cleanse_config,
            "target_class": self.target_class,
            "provenance": self.provenance,
        }
        if self.diagnostics is not None:
            d["diagnostics"] = self.diagnostics
        if self.explain_background is not None:
            d["explain_background"] = np.asarray(self.explain_background).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise BundleError(f"unrecognized bundle format_version {version!r}")
        bg = d.get("explain_background")
        return cls(
            kind=d["kind"],
            model=model_from_payload(d["kind"], d["payload"]),
            schema=FeatureSchema.from_dict(d["schema"]),
            cspp_thresholds=CsppThresholds.from_dict(d.get("cspp_thresholds", {})),
            cleanse_config=d.get("cleanse_config", {}),
            target_class=d.get("target_class", 1),
            provenance=d.get("provenance", {}),
            diagnostics=d.get("diagnostics"),
            explain_background=np.array(bg, dtype=np.float64) if bg is not None else None,
        )

    def to_bytes(self) -> bytes:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False)
        return (text + "\n").encode("utf-8")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ModelBundle":
        return cls.from_dict(json.loads(raw.decode("utf-8")))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ModelBundle":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())
