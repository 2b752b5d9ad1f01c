"""CART decision trees with Gini impurity (entropy behind a config switch).

Trees are stored as flat parallel arrays in node-creation order (preorder,
left child first), which keeps persistence, MDI, and the SHAP walk simple.
Candidate thresholds are midpoints between consecutive distinct sorted values;
ties break to the lowest feature index, then the lowest threshold, so a fitted
tree is unique for a given dataset and config.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _accel
from .cohort import Cohort

GINI = "gini"
ENTROPY = "entropy"


def gini(class_counts) -> float:
    """Gini impurity 1 - sum((count_i/total)^2)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("class counts must not be all zero")
    p = counts / total
    return float(1.0 - np.sum(p * p))


def entropy(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("class counts must not be all zero")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log(p)))


def _impurity(counts, criterion):
    return gini(counts) if criterion == GINI else entropy(counts)


@dataclass(frozen=True)
class TrainConfig:
    max_depth: int = 12
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_impurity_decrease: float = 0.0
    n_trees: int = 100
    feature_subsample_size: Optional[int] = None  # None -> ceil(sqrt(n_features))
    seed: int = 0
    criterion: str = GINI
    bootstrap: bool = True

    def __post_init__(self):
        if self.max_depth < 1 or self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ValueError("tree size limits must be positive")
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be >= 0")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.criterion not in (GINI, ENTROPY):
            raise ValueError(f"unknown criterion {self.criterion!r}")

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "min_impurity_decrease": self.min_impurity_decrease,
            "n_trees": self.n_trees,
            "feature_subsample_size": self.feature_subsample_size,
            "seed": self.seed,
            "criterion": self.criterion,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass(frozen=True)
class TreeNode:
    """Inspection view of one stored node."""

    n_samples: int
    class_counts: tuple[int, ...]
    impurity: float
    feature_index: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


class TreeModel:
    """Binary CART tree with full node statistics.

    Attributes are parallel arrays indexed by node id; ``children_left[i] < 0``
    marks a leaf. ``class_counts`` row sums equal ``n_samples``.
    """

    def __init__(self, children_left, children_right, feature, threshold,
                 n_samples, class_counts, impurity, n_classes, n_features,
                 train_config: TrainConfig):
        self.children_left = np.asarray(children_left, dtype=np.int64)
        self.children_right = np.asarray(children_right, dtype=np.int64)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.class_counts = np.asarray(class_counts, dtype=np.int64)
        self.impurity = np.asarray(impurity, dtype=np.float64)
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)
        self.train_config = train_config
        for arr in (self.children_left, self.children_right, self.feature,
                    self.threshold, self.n_samples, self.class_counts, self.impurity):
            arr.flags.writeable = False

    @property
    def node_count(self) -> int:
        return self.children_left.shape[0]

    def node(self, i: int) -> TreeNode:
        return TreeNode(
            n_samples=int(self.n_samples[i]),
            class_counts=tuple(int(c) for c in self.class_counts[i]),
            impurity=float(self.impurity[i]),
            feature_index=int(self.feature[i]),
            threshold=float(self.threshold[i]),
            left=int(self.children_left[i]),
            right=int(self.children_right[i]),
        )

    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            l, r = self.children_left[i], self.children_right[i]
            if l >= 0:
                depths[l] = depths[i] + 1
                depths[r] = depths[i] + 1
        return int(depths.max()) if self.node_count else 0

    def leaf_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _accel.route_leaves(self.children_left, self.children_right,
                                   self.feature, self.threshold, X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaves = self.leaf_indices(np.atleast_2d(X))
        counts = self.class_counts[leaves].astype(np.float64)
        return counts / self.n_samples[leaves, None]

    def class_value(self, target_class: int) -> np.ndarray:
        """Per-node probability of ``target_class`` (the SHAP leaf values)."""
        return self.class_counts[:, target_class] / self.n_samples


class _Builder:
    def __init__(self, X, y, n_classes, cfg: TrainConfig,
                 feature_picker: Callable[[], np.ndarray]):
        self.X = X
        self.y = y
        self.n_classes = n_classes
        self.cfg = cfg
        self.feature_picker = feature_picker
        self.kernel = (_accel.best_split_gini if cfg.criterion == GINI
                       else _accel.best_split_entropy)
        self.children_left: list[int] = []
        self.children_right: list[int] = []
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.n_samples: list[int] = []
        self.class_counts: list[np.ndarray] = []
        self.impurity: list[float] = []

    def _new_node(self, counts, imp, n):
        self.children_left.append(-1)
        self.children_right.append(-1)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.n_samples.append(n)
        self.class_counts.append(counts)
        self.impurity.append(imp)
        return len(self.n_samples) - 1

    def build(self, idx: np.ndarray, depth: int) -> int:
        cfg = self.cfg
        n = idx.shape[0]
        counts = np.bincount(self.y[idx], minlength=self.n_classes).astype(np.int64)
        imp = _impurity(counts, cfg.criterion)
        node = self._new_node(counts, imp, n)
        if (depth >= cfg.max_depth or n < cfg.min_samples_split
                or n < 2 * cfg.min_samples_leaf or imp <= 0.0):
            return node
        feats = self.feature_picker()
        best_feat, best_thr, _ = self.kernel(
            self.X, self.y, idx, feats, self.n_classes, cfg.min_samples_leaf)
        if best_feat < 0:
            return node
        mask = self.X[idx, best_feat] <= best_thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        counts_l = np.bincount(self.y[left_idx], minlength=self.n_classes)
        counts_r = counts - counts_l
        imp_l = _impurity(counts_l, cfg.criterion)
        imp_r = _impurity(counts_r, cfg.criterion)
        decrease = imp - (left_idx.shape[0] * imp_l + right_idx.shape[0] * imp_r) / n
        if decrease <= 0.0 or decrease < cfg.min_impurity_decrease:
            return node
        left = self.build(left_idx, depth + 1)
        right = self.build(right_idx, depth + 1)
        self.children_left[node] = left
        self.children_right[node] = right
        self.feature[node] = int(best_feat)
        self.threshold[node] = float(best_thr)
        return node

    def finish(self, train_config: TrainConfig, n_features: int) -> TreeModel:
        return TreeModel(
            np.array(self.children_left, dtype=np.int64),
            np.array(self.children_right, dtype=np.int64),
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.n_samples, dtype=np.int64),
            np.vstack(self.class_counts).astype(np.int64),
            np.array(self.impurity, dtype=np.float64),
            self.n_classes, n_features, train_config,
        )


def fit_tree_arrays(X: np.ndarray, y: np.ndarray, cfg: TrainConfig,
                    n_classes: Optional[int] = None,
                    row_idx: Optional[np.ndarray] = None,
                    feature_picker: Optional[Callable[[], np.ndarray]] = None) -> TreeModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if row_idx is None:
        row_idx = np.arange(X.shape[0], dtype=np.int64)
    if feature_picker is None:
        all_feats = np.arange(X.shape[1], dtype=np.int64)
        feature_picker = lambda: all_feats  # noqa: E731
    builder = _Builder(X, y, n_classes, cfg, feature_picker)
    builder.build(row_idx, 0)
    return builder.finish(cfg, X.shape[1])


def fit_tree(train: Cohort, cfg: TrainConfig = TrainConfig(),
             n_classes: Optional[int] = None) -> TreeModel:
    """Fits a CART tree on a labeled cohort."""
    if train.labels is None:
        raise ValueError("fit_tree requires labels")
    return fit_tree_arrays(train.values, train.labels, cfg, n_classes=n_classes)


def predict_tree(model: TreeModel, row: np.ndarray) -> np.ndarray:
    """Class-probability vector for one row (leaf counts normalized)."""
    return model.predict_proba(np.atleast_2d(np.asarray(row, dtype=np.float64)))[0]


def raw_importance(model: TreeModel) -> np.ndarray:
    """Unnormalized MDI: sum over nodes split on each feature of p(j) * decrease(j)."""
    out = np.zeros(model.n_features, dtype=np.float64)
    n_root = model.n_samples[0]
    for j in range(model.node_count):
        l = model.children_left[j]
        if l < 0:
            continue
        r = model.children_right[j]
        nj = model.n_samples[j]
        weighted_child = (model.n_samples[l] * model.impurity[l]
                          + model.n_samples[r] * model.impurity[r]) / nj
        out[model.feature[j]] += (nj / n_root) * (model.impurity[j] - weighted_child)
    return out
