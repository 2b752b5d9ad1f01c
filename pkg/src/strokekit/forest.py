"""Bootstrap random forests over the CART trees, plus MDI for both model kinds.

Per-tree randomness comes from a counter-based splitmix64 stream seeded with
splitmix64(seed XOR tree_index), so forests are reproducible bit-for-bit from
the config alone, independent of scheduling or backend. Each tree consumes its
stream in a fixed order: n bootstrap draws first (when bootstrapping), then
one block of draws per attempted split for the feature subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import SplitMixStream, splitmix64
from .cohort import Cohort
from .tree import TrainConfig, TreeModel, fit_tree_arrays, raw_importance


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    tree_seeds: tuple[int, ...]
    feature_subsample_size: int
    n_classes: int
    n_features: int
    train_config: TrainConfig

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        acc = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for t in self.trees:
            acc += t.predict_proba(X)
        return acc / len(self.trees)


def subsample_size(n_features: int, cfg: TrainConfig) -> int:
    if cfg.feature_subsample_size is None:
        return int(math.ceil(math.sqrt(n_features)))
    if not 1 <= cfg.feature_subsample_size <= n_features:
        raise ValueError("feature_subsample_size must be in [1, n_features]")
    return cfg.feature_subsample_size


def bootstrap_indices(tree_seed: int, n_rows: int) -> np.ndarray:
    """Sorted with-replacement sample of size n_rows for one tree's stream."""
    stream = SplitMixStream(tree_seed)
    return np.sort(stream.randints(n_rows, n_rows))


def _fit_one_tree(X, y, n_classes, cfg: TrainConfig, tree_seed: int, k: int) -> TreeModel:
    n = X.shape[0]
    stream = SplitMixStream(tree_seed)
    if cfg.bootstrap:
        idx = np.sort(stream.randints(n, n))
    else:
        idx = np.arange(n, dtype=np.int64)
    n_features = X.shape[1]
    if k >= n_features:
        all_feats = np.arange(n_features, dtype=np.int64)
        picker = lambda: all_feats  # noqa: E731
    else:
        picker = lambda: stream.choose_subset(n_features, k)  # noqa: E731
    return fit_tree_arrays(X, y, cfg, n_classes=n_classes, row_idx=idx,
                           feature_picker=picker)


def fit_forest(train: Cohort, cfg: TrainConfig = TrainConfig(),
               n_classes: int | None = None) -> ForestModel:
    if train.labels is None:
        raise ValueError("fit_forest requires labels")
    X = np.ascontiguousarray(train.values, dtype=np.float64)
    y = np.ascontiguousarray(train.labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    k = subsample_size(X.shape[1], cfg)
    seeds = tuple(splitmix64(cfg.seed ^ t) for t in range(cfg.n_trees))
    trees = tuple(_fit_one_tree(X, y, n_classes, cfg, s, k) for s in seeds)
    return ForestModel(trees, seeds, k, n_classes, X.shape[1], cfg)


def predict_forest(model: ForestModel, row: np.ndarray) -> np.ndarray:
    """Mean of the per-tree probability vectors for one row."""
    return model.predict_proba(np.atleast_2d(np.asarray(row, dtype=np.float64)))[0]


def oob_accuracy(model: ForestModel, train: Cohort) -> float:
    """Out-of-bag accuracy, regenerating bootstrap sets from the stored seeds."""
    if train.labels is None:
        raise ValueError("oob_accuracy requires labels")
    X = np.ascontiguousarray(train.values, dtype=np.float64)
    n = X.shape[0]
    acc = np.zeros((n, model.n_classes), dtype=np.float64)
    votes = np.zeros(n, dtype=np.int64)
    for tree, seed in zip(model.trees, model.tree_seeds):
        inbag = np.zeros(n, dtype=bool)
        inbag[bootstrap_indices(seed, n)] = True
        oob = ~inbag
        if not oob.any():
            continue
        acc[oob] += tree.predict_proba(X[oob])
        votes[oob] += 1
    covered = votes > 0
    if not covered.any():
        raise ValueError("no out-of-bag rows; was the forest bootstrapped?")
    pred = np.argmax(acc[covered], axis=1)
    return float(np.mean(pred == train.labels[covered]))


def mdi_importance(model) -> np.ndarray:
    """Normalized mean-decrease-impurity importances for a tree or forest.

    Raw per-tree importances (cover-weighted impurity decreases) are averaged
    across trees first, then the vector is normalized to sum to one. A model
    with no splits anywhere yields all zeros.
    """
    if isinstance(model, ForestModel):
        raw = np.zeros(model.n_features, dtype=np.float64)
        for t in model.trees:
            raw += raw_importance(t)
        raw /= len(model.trees)
    elif isinstance(model, TreeModel):
        raw = raw_importance(model)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    total = raw.sum()
    return raw / total if total > 0 else raw
