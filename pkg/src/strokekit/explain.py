"""Model explanation: permutation importance, exact Shapley, and TreeSHAP.

Two value functions are in play, both documented here because the choice
matters for what the numbers mean:

* ``exact_shapley`` uses the interventional background-marginal form: v(S) is
  the mean model output over background rows with the coalition's features
  taken from the explained row. Exponential in feature count, so it refuses
  more than 20 features.
* ``tree_shap`` is the path-dependent polynomial algorithm whose implicit
  value function conditions on node covers (training-sample fractions stored
  in each node). It needs only the persisted node statistics, and a forest
  explanation is the mean of its tree explanations.

Both satisfy local accuracy: base_value + sum(contributions) equals the model
output on the explained row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _accel
from .cohort import Cohort
from .forest import ForestModel
from .logit import LogitModel
from .tree import TreeModel

Model = Union[TreeModel, ForestModel, LogitModel, Callable]

MAX_EXACT_FEATURES = 20


@dataclass(frozen=True)
class Explanation:
    base_value: float
    contributions: np.ndarray
    output_kind: str

    def __post_init__(self):
        arr = np.asarray(self.contributions, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "contributions", arr)

    @property
    def total(self) -> float:
        return float(self.base_value + self.contributions.sum())


def output_fn(model: Model, target_class: int) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar-per-row model output used by the explainers."""
    if isinstance(model, (TreeModel, ForestModel)):
        return lambda X: model.predict_proba(X)[:, target_class]
    if isinstance(model, LogitModel):
        return lambda X: model.predict_matrix(X)
    if callable(model):
        return lambda X: np.asarray(model(X), dtype=np.float64)
    raise TypeError(f"unsupported model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# Exact Shapley by coalition enumeration
# ---------------------------------------------------------------------------

def exact_shapley(model: Model, row: np.ndarray, background: Union[Cohort, np.ndarray],
                  target_class: int = 1) -> Explanation:
    """Exact Shapley values by full enumeration of the 2^n coalitions."""
    x = np.asarray(row, dtype=np.float64).ravel()
    bg = background.values if isinstance(background, Cohort) else np.asarray(background)
    bg = np.ascontiguousarray(np.atleast_2d(bg), dtype=np.float64)
    n = x.shape[0]
    if bg.shape[1] != n:
        raise ValueError("background and row must share the feature count")
    if bg.shape[0] == 0:
        raise ValueError("background must be non-empty")
    if n > MAX_EXACT_FEATURES:
        raise ValueError(
            f"{n} features exceeds the 2^n enumeration limit ({MAX_EXACT_FEATURES}); "
            "use tree_shap for tree models")
    f = output_fn(model, target_class)

    # v(S) for every coalition bitmask: mean output over background rows with
    # the coalition's features replaced by the explained row's values.
    v = np.empty(1 << n, dtype=np.float64)
    for mask in range(1 << n):
        comp = bg.copy()
        for i in range(n):
            if mask >> i & 1:
                comp[:, i] = x[i]
        v[mask] = f(comp).mean()

    fact = [math.factorial(i) for i in range(n + 1)]
    weight = [fact[s] * fact[n - s - 1] / fact[n] for s in range(n)]
    phi = np.zeros(n, dtype=np.float64)
    for mask in range(1 << n):
        s = bin(mask).count("1")
        for i in range(n):
            if not mask >> i & 1:
                phi[i] += weight[s] * (v[mask | (1 << i)] - v[mask])
    return Explanation(base_value=float(v[0]), contributions=phi,
                       output_kind=f"probability_class_{target_class}")


# ---------------------------------------------------------------------------
# Path-dependent TreeSHAP
# ---------------------------------------------------------------------------

def expected_value(tree: TreeModel, target_class: int) -> float:
    """Cover-weighted expectation of the tree's target-class probability."""
    value = tree.class_value(target_class)
    out = np.zeros(tree.node_count, dtype=np.float64)
    for j in range(tree.node_count - 1, -1, -1):
        l = tree.children_left[j]
        if l < 0:
            out[j] = value[j]
        else:
            r = tree.children_right[j]
            out[j] = (tree.n_samples[l] * out[l] + tree.n_samples[r] * out[r]) / tree.n_samples[j]
    return float(out[0])


def _tree_shap_one(tree: TreeModel, x: np.ndarray, target_class: int) -> tuple[float, np.ndarray]:
    value = np.ascontiguousarray(tree.class_value(target_class), dtype=np.float64)
    cover = tree.n_samples.astype(np.float64)
    phi = _accel.treeshap_single(tree.children_left, tree.children_right,
                                 tree.feature, tree.threshold, cover, value,
                                 np.ascontiguousarray(x, dtype=np.float64),
                                 tree.n_features)
    return expected_value(tree, target_class), phi


def tree_shap(model: Union[TreeModel, ForestModel], row: np.ndarray,
              target_class: int = 1) -> Explanation:
    """Path-dependent TreeSHAP for one row; forest = mean of tree explanations."""
    x = np.asarray(row, dtype=np.float64).ravel()
    if isinstance(model, TreeModel):
        base, phi = _tree_shap_one(model, x, target_class)
    elif isinstance(model, ForestModel):
        base = 0.0
        phi = np.zeros(model.n_features, dtype=np.float64)
        for t in model.trees:
            b, p = _tree_shap_one(t, x, target_class)
            base += b
            phi += p
        base /= len(model.trees)
        phi /= len(model.trees)
    else:
        raise TypeError("tree_shap requires a TreeModel or ForestModel")
    return Explanation(base_value=float(base), contributions=phi,
                       output_kind=f"probability_class_{target_class}")


def shap_matrix(model: Union[TreeModel, ForestModel], X: np.ndarray,
                target_class: int) -> tuple[float, np.ndarray]:
    """(base, phi matrix) for many rows; base is row-independent."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    trees = model.trees if isinstance(model, ForestModel) else (model,)
    base = 0.0
    phi = np.zeros((X.shape[0], trees[0].n_features), dtype=np.float64)
    for t in trees:
        value = np.ascontiguousarray(t.class_value(target_class), dtype=np.float64)
        cover = t.n_samples.astype(np.float64)
        base += expected_value(t, target_class)
        for i in range(X.shape[0]):
            phi[i] += _accel.treeshap_single(t.children_left, t.children_right,
                                             t.feature, t.threshold, cover, value,
                                             X[i], t.n_features)
    base /= len(trees)
    phi /= len(trees)
    return float(base), phi


# ---------------------------------------------------------------------------
# Permutation importance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationReport:
    feature_names: tuple[str, ...]
    baseline_score: float
    scores: np.ndarray  # (n_features, K) per-repetition scores
    importances: np.ndarray
    repetitions: int
    metric: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "baseline_score": self.baseline_score,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "features": [
                {"name": n, "importance": float(self.importances[i]),
                 "scores": [float(s) for s in self.scores[i]]}
                for i, n in enumerate(self.feature_names)
            ],
        }


def permutation_importance(model: Model, data: Cohort, metric: str = "weighted_precision",
                           repetitions: int = 10, seed: int = 0) -> PermutationReport:
    """Baseline score minus mean score after shuffling each feature column.

    Each (feature, repetition) pair uses its own seed-derived permutation, and
    shuffles act on a scratch copy so the cohort is never modified.
    """
    from .evaluate import predict_labels, score_fn  # local import; evaluate imports explain

    if data.labels is None:
        raise ValueError("permutation_importance requires labels")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    scorer = score_fn(metric)
    X = data.values
    y = data.labels
    baseline = scorer(y, predict_labels(model, X))
    n_features = X.shape[1]
    scores = np.empty((n_features, repetitions), dtype=np.float64)
    work = X.copy()
    for i in range(n_features):
        original = work[:, i].copy()
        for j in range(repetitions):
            rng = np.random.default_rng([seed, i, j])
            work[:, i] = original[rng.permutation(X.shape[0])]
            scores[i, j] = scorer(y, predict_labels(model, work))
        work[:, i] = original
    importances = baseline - scores.mean(axis=1)
    return PermutationReport(
        feature_names=tuple(data.schema.names),
        baseline_score=float(baseline),
        scores=scores,
        importances=importances,
        repetitions=repetitions,
        metric=metric,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# SHAP exports for plotting / the web UI
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryExport:
    feature_names: tuple[str, ...]
    shap_values: np.ndarray     # (n_rows, n_features)
    feature_values: np.ndarray  # (n_rows, n_features)
    base_value: float
    ranking: tuple[tuple[str, float], ...]  # (feature, mean |shap|) descending

    def records(self):
        """One (feature, row, shap_value, feature_value) record per cell."""
        n_rows, n_features = self.shap_values.shape
        for j in range(n_features):
            for i in range(n_rows):
                yield (self.feature_names[j], i,
                       float(self.shap_values[i, j]),
                       float(self.feature_values[i, j]))


def shap_summary_export(model: Union[TreeModel, ForestModel], data: Cohort,
                        target_class: int) -> SummaryExport:
    base, phi = shap_matrix(model, data.values, target_class)
    mean_abs = np.abs(phi).mean(axis=0)
    order = sorted(range(phi.shape[1]), key=lambda j: (-mean_abs[j], j))
    ranking = tuple((data.schema.names[j], float(mean_abs[j])) for j in order)
    return SummaryExport(
        feature_names=tuple(data.schema.names),
        shap_values=phi,
        feature_values=data.values.copy(),
        base_value=base,
        ranking=ranking,
    )


@dataclass(frozen=True)
class DependenceExport:
    feature_a: str
    feature_b: str
    value_a: np.ndarray
    shap_a: np.ndarray
    value_b: np.ndarray


def shap_dependence_export(model: Union[TreeModel, ForestModel], data: Cohort,
                           feature_a: str, feature_b: str,
                           target_class: int) -> DependenceExport:
    """Per-row (value_a, shap_a, value_b) triples for an external dependence plot."""
    ia = data.schema.index_of(feature_a)
    ib = data.schema.index_of(feature_b)
    _, phi = shap_matrix(model, data.values, target_class)
    return DependenceExport(
        feature_a=feature_a,
        feature_b=feature_b,
        value_a=data.values[:, ia].copy(),
        shap_a=phi[:, ia],
        value_b=data.values[:, ib].copy(),
    )
