"""Classification reports, risk-level probability summaries, the
missing-proportion sweep, and recursive feature elimination."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .cohort import Cohort, MISSING, split_stratified
from .forest import ForestModel, mdi_importance
from .logit import LogitModel
from .rules import RiskLabel
from .tree import TreeModel

logger = logging.getLogger(__name__)

Z_95 = 1.96


def predict_labels(model, X: np.ndarray) -> np.ndarray:
    """Hard labels: argmax class for trees/forests, 0.5 threshold for logit."""
    if isinstance(model, (TreeModel, ForestModel)):
        return np.argmax(model.predict_proba(X), axis=1)
    if isinstance(model, LogitModel):
        return (model.predict_matrix(X) >= 0.5).astype(np.int64)
    if callable(model):
        return np.asarray(model(X), dtype=np.int64)
    raise TypeError(f"unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class ClassificationReport:
    class_names: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    never_predicted: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "classes": [
                {"name": n, "precision": float(self.precision[i]),
                 "recall": float(self.recall[i]), "f1": float(self.f1[i]),
                 "support": int(self.support[i])}
                for i, n in enumerate(self.class_names)
            ],
            "accuracy": self.accuracy,
            "macro_avg": {"precision": self.macro_precision,
                          "recall": self.macro_recall, "f1": self.macro_f1},
            "weighted_avg": {"precision": self.weighted_precision,
                             "recall": self.weighted_recall, "f1": self.weighted_f1},
            "never_predicted": list(self.never_predicted),
        }

    def to_text(self) -> str:
        lines = [f"{'':>12} {'precision':>10} {'recall':>10} {'f1-score':>10} {'support':>8}"]
        for i, n in enumerate(self.class_names):
            lines.append(f"{n:>12} {self.precision[i]:>10.4f} {self.recall[i]:>10.4f} "
                         f"{self.f1[i]:>10.4f} {int(self.support[i]):>8}")
        total = int(self.support.sum())
        lines.append(f"{'accuracy':>12} {'':>10} {'':>10} {self.accuracy:>10.4f} {total:>8}")
        lines.append(f"{'macro avg':>12} {self.macro_precision:>10.4f} "
                     f"{self.macro_recall:>10.4f} {self.macro_f1:>10.4f} {total:>8}")
        lines.append(f"{'weighted avg':>12} {self.weighted_precision:>10.4f} "
                     f"{self.weighted_recall:>10.4f} {self.weighted_f1:>10.4f} {total:>8}")
        return "\n".join(lines)


def classification_report(y_true, y_pred, class_names: Optional[Sequence[str]] = None) -> ClassificationReport:
    """One-vs-rest precision/recall/f1 per class with macro and support-weighted
    averages. A class never predicted gets precision 0 and a logged warning."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise ValueError("need at least one sample")
    n_classes = int(max(y_true.max(), y_pred.max())) + 1
    if class_names is None:
        class_names = [f"class {c}" for c in range(n_classes)]
    if len(class_names) < n_classes:
        raise ValueError("class_names shorter than the observed class range")
    n_classes = len(class_names)

    precision = np.zeros(n_classes)
    recall = np.zeros(n_classes)
    f1 = np.zeros(n_classes)
    support = np.zeros(n_classes, dtype=np.int64)
    never = []
    for c in range(n_classes):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        predicted = int(np.sum(y_pred == c))
        actual = int(np.sum(y_true == c))
        support[c] = actual
        if predicted == 0:
            if actual > 0:
                never.append(class_names[c])
                logger.warning("class %r never predicted; precision set to 0", class_names[c])
            precision[c] = 0.0
        else:
            precision[c] = tp / predicted
        recall[c] = tp / actual if actual > 0 else 0.0
        denom = precision[c] + recall[c]
        f1[c] = 2 * precision[c] * recall[c] / denom if denom > 0 else 0.0

    total = int(support.sum())
    weights = support / total
    return ClassificationReport(
        class_names=tuple(class_names),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=float(np.mean(y_true == y_pred)),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float(np.sum(weights * precision)),
        weighted_recall=float(np.sum(weights * recall)),
        weighted_f1=float(np.sum(weights * f1)),
        never_predicted=tuple(never),
    )


def weighted_precision(y_true, y_pred) -> float:
    return classification_report(y_true, y_pred).weighted_precision


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def score_fn(metric: str) -> Callable[[np.ndarray, np.ndarray], float]:
    if metric == "weighted_precision":
        return weighted_precision
    if metric == "accuracy":
        return accuracy
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# Per-risk-level probability summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiskGroupSummary:
    levels: tuple[str, ...]
    mean_probability: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    group_sizes: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "levels": [
                {"level": lv, "mean_probability": m, "ci_low": lo, "ci_high": hi, "n": n}
                for lv, m, lo, hi, n in zip(self.levels, self.mean_probability,
                                            self.ci_low, self.ci_high, self.group_sizes)
            ]
        }


def risk_group_probability(model: LogitModel, test: Cohort) -> RiskGroupSummary:
    """Mean predicted stroke probability per CSPP level with a normal-approx
    CI of the mean (mean +- 1.96 * sample std / sqrt(n))."""
    if test.labels is None:
        raise ValueError("risk_group_probability requires CSPP labels")
    proba = model.predict_cohort(test)
    levels, means, los, his, sizes = [], [], [], [], []
    for level in (RiskLabel.LOW, RiskLabel.MEDIUM, RiskLabel.HIGH):
        mask = test.labels == int(level)
        n = int(mask.sum())
        if n == 0:
            raise ValueError(f"empty risk level group {level.display}")
        p = proba[mask]
        m = float(p.mean())
        sd = float(p.std(ddof=1)) if n > 1 else 0.0
        half = Z_95 * sd / np.sqrt(n)
        levels.append(level.display)
        means.append(m)
        los.append(m - half)
        his.append(m + half)
        sizes.append(n)
    return RiskGroupSummary(tuple(levels), tuple(means), tuple(los), tuple(his), tuple(sizes))


# ---------------------------------------------------------------------------
# Missing-proportion sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepCurve:
    feature: str
    proportions: tuple[float, ...]
    mean_score: tuple[float, ...]
    band_low: tuple[float, ...]
    band_high: tuple[float, ...]
    scores: np.ndarray  # (n_proportions, R)


@dataclass(frozen=True)
class SweepResult:
    baseline_score: float
    repetitions: int
    metric: str
    seed: int
    curves: tuple[SweepCurve, ...]

    def curve(self, feature: str) -> SweepCurve:
        for c in self.curves:
            if c.feature == feature:
                return c
        raise KeyError(feature)

    def to_dict(self) -> dict:
        return {
            "baseline_score": self.baseline_score,
            "repetitions": self.repetitions,
            "metric": self.metric,
            "seed": self.seed,
            "curves": [
                {"feature": c.feature,
                 "points": [
                     {"proportion": p, "mean": m, "band_low": lo, "band_high": hi}
                     for p, m, lo, hi in zip(c.proportions, c.mean_score,
                                             c.band_low, c.band_high)
                 ]}
                for c in self.curves
            ],
        }


DEFAULT_PROPORTIONS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def missing_sweep(model_trainer: Callable[[Cohort], object], data: Cohort,
                  feature_list: Sequence[str],
                  proportions: Sequence[float] = DEFAULT_PROPORTIONS,
                  repetitions: int = 100, seed: int = 0,
                  test_fraction: float = 0.2,
                  exclude_features: Sequence[str] = ()) -> SweepResult:
    """Trains once, then corrupts one test feature at a time at increasing
    missing proportions; the model stays fixed so the curves isolate
    measurement-time robustness. ``exclude_features`` removes strongly
    correlated partners before training so their information cannot mask the
    swept feature."""
    if repetitions < 2:
        raise ValueError("repetitions must be >= 2")
    props = [float(p) for p in proportions]
    if any(p < 0 or p > 1 for p in props) or sorted(props) != props:
        raise ValueError("proportions must be increasing within [0, 1]")
    work = data.drop_columns(exclude_features) if exclude_features else data
    for name in feature_list:
        work.schema.index_of(name)  # validates

    train, test = split_stratified(work, test_fraction, seed)
    model = model_trainer(train)
    baseline = weighted_precision(test.labels, predict_labels(model, test.values))

    n = test.row_count
    curves = []
    for name in feature_list:
        col = work.schema.index_of(name)
        scores = np.empty((len(props), repetitions), dtype=np.float64)
        for pi, p in enumerate(props):
            k = int(round(p * n))
            for r in range(repetitions):
                if k == 0:
                    scores[pi, r] = baseline
                    continue
                rng = np.random.default_rng([seed, col, pi, r])
                rows = rng.choice(n, size=k, replace=False)
                corrupted = test.values.copy()
                corrupted[rows, col] = MISSING
                scores[pi, r] = weighted_precision(test.labels,
                                                   predict_labels(model, corrupted))
        mean = scores.mean(axis=1)
        sd = scores.std(axis=1, ddof=1)
        half = Z_95 * sd / np.sqrt(repetitions)
        curves.append(SweepCurve(
            feature=name,
            proportions=tuple(props),
            mean_score=tuple(map(float, mean)),
            band_low=tuple(map(float, mean - half)),
            band_high=tuple(map(float, mean + half)),
            scores=scores,
        ))
    return SweepResult(float(baseline), repetitions, "weighted_precision", seed,
                       tuple(curves))


# ---------------------------------------------------------------------------
# Recursive feature elimination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RfeStep:
    n_features_remaining: int
    feature_names: tuple[str, ...]
    importances: tuple[float, ...]
    removed_feature: Optional[str]
    class_precision: tuple[float, ...]
    weighted_precision: float


@dataclass(frozen=True)
class RfeTrace:
    steps: tuple[RfeStep, ...]

    def to_dict(self) -> dict:
        return {
            "steps": [
                {"n_features_remaining": s.n_features_remaining,
                 "features": list(s.feature_names),
                 "importances": list(s.importances),
                 "removed_feature": s.removed_feature,
                 "class_precision": list(s.class_precision),
                 "weighted_precision": s.weighted_precision}
                for s in self.steps
            ]
        }

    def plateau_size(self, tolerance: float = 0.03) -> int:
        """Smallest feature count whose weighted precision stays within
        ``tolerance`` of the full-feature-set baseline (the first step)."""
        baseline = self.steps[0].weighted_precision
        sizes = [s.n_features_remaining for s in self.steps
                 if s.weighted_precision >= baseline - tolerance]
        return min(sizes)


def rfe(model_trainer: Callable[[Cohort], object], data: Cohort, target_n: int,
        seed: int = 0, test_fraction: float = 0.2) -> RfeTrace:
    """Iteratively drops the least MDI-important feature until target_n remain.

    Each step records the importances it acted on plus held-out per-class
    precision, so removals are auditable from the trace alone. Importance ties
    break to the lowest column index.
    """
    n_features = len(data.schema)
    if not 1 <= target_n < n_features:
        raise ValueError("need 1 <= target_n < n_features")
    train, test = split_stratified(data, test_fraction, seed)
    current = list(data.schema.names)
    steps = []
    while True:
        tr = train.select_columns(current)
        te = test.select_columns(current)
        model = model_trainer(tr)
        imp = mdi_importance(model)
        report = classification_report(te.labels, predict_labels(model, te.values))
        if len(current) > target_n:
            removed_idx = int(np.argmin(imp))
            removed = current[removed_idx]
        else:
            removed = None
        steps.append(RfeStep(
            n_features_remaining=len(current),
            feature_names=tuple(current),
            importances=tuple(map(float, imp)),
            removed_feature=removed,
            class_precision=tuple(map(float, report.precision)),
            weighted_precision=float(report.weighted_precision),
        ))
        if removed is None:
            break
        current.remove(removed)
    return RfeTrace(tuple(steps))
