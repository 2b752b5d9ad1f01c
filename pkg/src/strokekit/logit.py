"""Binary logistic regression with Newton/IRLS fitting and Wald inference.

Numeric features are z-scored before fitting (the stored means/scales make
fitted models self-contained); categorical codes enter as-is. The fit is plain
maximum likelihood with step-halving, and the reported standard errors come
from the inverse observed Fisher information, so the diagnostics table carries
coef / std err / z / p / 95% CI columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cohort import Cohort, NUMERICAL
from .rules import RiskLabel

Z_95 = 1.96

DEFAULT_SELECTION_RULES = (
    {"keep": "BMI", "drop": ["Height", "Weight"]},
    {"drop": ["Ethnicity"]},
)


class FitError(RuntimeError):
    pass


class PerfectSeparationError(FitError):
    """Coefficients diverged; the classes are (close to) perfectly separable."""


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_likelihood(Z: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = Z @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def gradient(Z: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return Z.T @ (y - sigmoid(Z @ beta))


def relabel_binary(cohort: Cohort) -> Cohort:
    """Low/Medium -> 0, High -> 1; hospitalized-stroke rows are always 1."""
    if cohort.labels is None:
        raise ValueError("relabel_binary requires labels")
    y = (cohort.labels == int(RiskLabel.HIGH)).astype(np.int64)
    if cohort.stroke is not None:
        y = y | (cohort.stroke > 0).astype(np.int64)
    return cohort.with_labels(y)


def select_features(cohort: Cohort, variance_threshold: float = 0.0,
                    correlation_rules: Sequence[dict] = DEFAULT_SELECTION_RULES) -> Cohort:
    """Drops multicollinear columns per the explicit rules, then low-variance ones."""
    drop: list[str] = []
    for rule in correlation_rules:
        keep = rule.get("keep")
        if keep is not None and not cohort.schema.has(keep):
            raise ValueError(f"selection rule references unknown column {keep!r}")
        for name in rule.get("drop", []):
            if not cohort.schema.has(name):
                raise ValueError(f"selection rule references unknown column {name!r}")
            drop.append(name)
    out = cohort.drop_columns(drop) if drop else cohort
    if variance_threshold > 0:
        var = out.values.var(axis=0)
        low = [f.name for f, v in zip(out.schema.features, var) if v < variance_threshold]
        if low:
            out = out.drop_columns(low)
    return out


@dataclass(frozen=True)
class LogitModel:
    feature_names: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray  # one per feature, log-odds units
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        for name in ("coefficients", "means", "scales"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (len(self.feature_names),):
                raise ValueError(f"{name} must have one entry per feature")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(self.scales <= 0):
            raise ValueError("scales must be positive")

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.scales

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + self.standardize(np.atleast_2d(X)) @ self.coefficients

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.linear_predictor(X))

    def predict_cohort(self, cohort: Cohort) -> np.ndarray:
        idx = [cohort.schema.index_of(n) for n in self.feature_names]
        return self.predict_matrix(cohort.values[:, idx])


@dataclass(frozen=True)
class FitDiagnostics:
    names: tuple[str, ...]  # "constant" last, matching the report layout
    coef: np.ndarray
    std_err: np.ndarray
    z_stat: np.ndarray
    p_value: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    iterations: int
    converged: bool
    log_likelihood: float
    ll_path: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        rows = []
        for i, name in enumerate(self.names):
            rows.append({
                "name": name,
                "coef": float(self.coef[i]),
                "std_err": float(self.std_err[i]),
                "z": float(self.z_stat[i]),
                "p_value": float(self.p_value[i]),
                "ci_low": float(self.ci_low[i]),
                "ci_high": float(self.ci_high[i]),
            })
        return {
            "coefficients": rows,
            "iterations": self.iterations,
            "converged": self.converged,
            "log_likelihood": self.log_likelihood,
        }


def _wald(names, beta, Z, y, iterations, converged, ll_path):
    p = sigmoid(Z @ beta)
    w = p * (1.0 - p)
    info = (Z * w[:, None]).T @ Z
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Fisher information matrix") from exc
    se = np.sqrt(np.diag(cov))
    if not np.isfinite(se).all():
        raise FitError("singular Fisher information matrix")
    z = beta / se
    pv = np.array([math.erfc(abs(v) / math.sqrt(2.0)) for v in z])
    return FitDiagnostics(
        names=tuple(names),
        coef=beta.copy(),
        std_err=se,
        z_stat=z,
        p_value=pv,
        ci_low=beta - Z_95 * se,
        ci_high=beta + Z_95 * se,
        iterations=iterations,
        converged=converged,
        log_likelihood=log_likelihood(Z, y, beta),
        ll_path=tuple(ll_path),
    )


def fit_logit_arrays(X: np.ndarray, y: np.ndarray, feature_names: Sequence[str],
                     numeric_mask: Optional[np.ndarray] = None,
                     max_iter: int = 100, tol: float = 1e-8,
                     separation_norm: float = 50.0):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, m = X.shape
    if n <= m:
        raise FitError("need more rows than features")
    if y.min() == y.max():
        raise FitError("both classes must be present")
    if numeric_mask is None:
        numeric_mask = np.ones(m, dtype=bool)

    means = np.where(numeric_mask, X.mean(axis=0), 0.0)
    sds = X.std(axis=0)
    if np.any(sds[numeric_mask] == 0):
        bad = [feature_names[i] for i in range(m) if numeric_mask[i] and sds[i] == 0]
        raise FitError(f"zero-variance feature(s) {bad}; run select_features first")
    scales = np.where(numeric_mask, sds, 1.0)

    Zd = np.column_stack([np.ones(n), (X - means) / scales])
    beta = np.zeros(m + 1)
    ll = log_likelihood(Zd, y, beta)
    ll_path = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = sigmoid(Zd @ beta)
        grad = Zd.T @ (y - p)
        if np.max(np.abs(grad)) < tol:
            converged = True
            iterations -= 1
            break
        w = np.clip(p * (1.0 - p), 1e-12, None)
        info = (Zd * w[:, None]).T @ Zd
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular Fisher information matrix") from exc
        # Step-halving keeps the log-likelihood non-decreasing.
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            cand_ll = log_likelihood(Zd, y, cand)
            if cand_ll >= ll:
                break
            scale *= 0.5
        beta = beta + scale * step
        ll = cand_ll
        ll_path.append(ll)
        if np.linalg.norm(beta) > separation_norm:
            raise PerfectSeparationError(
                f"coefficient norm exceeded {separation_norm}; classes look separable")
        if np.linalg.norm(scale * step) < tol:
            converged = True
            break

    names = list(feature_names) + ["constant"]
    diag = _wald(names, np.concatenate([beta[1:], beta[:1]]),
                 np.column_stack([Zd[:, 1:], Zd[:, :1]]), y, iterations, converged,
                 ll_path)
    model = LogitModel(
        feature_names=tuple(feature_names),
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        means=means,
        scales=scales,
    )
    return model, diag


def fit_logit(cohort: Cohort, max_iter: int = 100, tol: float = 1e-8):
    """Fits the binary model on a relabeled cohort; returns (model, diagnostics)."""
    if cohort.labels is None:
        raise ValueError("fit_logit requires binary labels")
    numeric = np.array([f.kind == NUMERICAL for f in cohort.schema.features])
    return fit_logit_arrays(cohort.values, cohort.labels, cohort.schema.names,
                            numeric_mask=numeric, max_iter=max_iter, tol=tol)


def predict_proba(model: LogitModel, row: np.ndarray) -> float:
    """Stroke probability for one row ordered per the model's feature list."""
    return float(model.predict_matrix(np.atleast_2d(np.asarray(row, dtype=np.float64)))[0])
