import math

import numpy as np
import pytest

from strokekit.cohort import CATEGORICAL, Cohort, Feature, FeatureSchema, NUMERICAL
from strokekit.logit import (
    FitError,
    LogitModel,
    PerfectSeparationError,
    fit_logit,
    fit_logit_arrays,
    gradient,
    log_likelihood,
    predict_proba,
    relabel_binary,
    select_features,
    sigmoid,
)
from strokekit.rules import RiskLabel

# Printed Wald table rows: (name, coef, std_err, ci_low, ci_high).
PUBLISHED_WALD_ROWS = [
    ("History of Stroke", 2.6779, 0.247, 2.194, 3.162),
    ("Physical Inactivity", 1.3948, 0.027, 1.341, 1.449),
    ("Hypertension", 1.1489, 0.027, 1.095, 1.203),
    ("Hyperlipidemia", 1.0875, 0.025, 1.038, 1.137),
    ("Smoke", 1.0455, 0.031, 0.985, 1.106),
    ("Diabetes Mellitus", 0.8043, 0.025, 0.756, 0.853),
    ("BMI", 0.7897, 0.026, 0.739, 0.840),
    ("Family history of stroke", 0.7447, 0.024, 0.697, 0.793),
    ("Heart Disease", 0.4257, 0.029, 0.369, 0.483),
    ("Frequency of Fruit", 0.1507, 0.026, 0.100, 0.202),
    ("Alcohol", 0.1325, 0.025, 0.083, 0.182),
    ("Pulse", 0.1279, 0.023, 0.083, 0.173),
    ("Sex", 0.0863, 0.029, 0.029, 0.144),
    ("Retire", 0.0754, 0.025, 0.026, 0.125),
    ("Age", 0.0548, 0.026, 0.003, 0.106),
    ("Frequency of Vegetables", -0.2262, 0.025, -0.275, -0.178),
    ("Occupation", -0.2166, 0.026, -0.268, -0.165),
    ("Education Level", -0.3640, 0.027, -0.416, -0.312),
    ("constant", -0.7868, 0.068, -0.920, -0.653),
]


def schema_of(names, kinds=None):
    kinds = kinds or [NUMERICAL] * len(names)
    return FeatureSchema(tuple(Feature(n, k) for n, k in zip(names, kinds)))


class TestRelabel:
    def _cohort(self, labels, stroke=None):
        n = len(labels)
        return Cohort(schema_of(["x"]), np.zeros((n, 1)),
                      labels=np.array(labels), stroke=stroke)

    def test_medium_is_zero(self):
        c = self._cohort([int(RiskLabel.MEDIUM)])
        assert relabel_binary(c).labels.tolist() == [0]

    def test_high_is_one(self):
        c = self._cohort([int(RiskLabel.HIGH)])
        assert relabel_binary(c).labels.tolist() == [1]

    def test_stroke_patient_is_one(self):
        c = self._cohort([int(RiskLabel.LOW)], stroke=np.array([1]))
        assert relabel_binary(c).labels.tolist() == [1]

    def test_empty_cohort(self):
        c = Cohort(schema_of(["x"]), np.zeros((0, 1)), labels=np.zeros(0, dtype=int))
        assert relabel_binary(c).row_count == 0

    def test_unlabeled_errors(self):
        c = Cohort(schema_of(["x"]), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            relabel_binary(c)


class TestSelectFeatures:
    def _cohort(self):
        rng = np.random.default_rng(2)
        names = ["BMI", "Height", "Weight", "Ethnicity", "Age", "Const"]
        values = rng.normal(size=(50, 6))
        values[:, 5] = 3.0
        return Cohort(schema_of(names), values)

    def test_constant_column_dropped_by_variance(self):
        out = select_features(self._cohort(), variance_threshold=1e-6,
                              correlation_rules=())
        assert not out.schema.has("Const")

    def test_default_rules_keep_bmi_drop_height_weight_ethnicity(self):
        out = select_features(self._cohort())
        assert out.schema.has("BMI")
        for gone in ("Height", "Weight", "Ethnicity"):
            assert not out.schema.has(gone)

    def test_threshold_zero_only_rules_apply(self):
        out = select_features(self._cohort(), variance_threshold=0.0)
        assert out.schema.has("Const")  # constant survives with threshold 0

    def test_unknown_rule_column_errors(self):
        with pytest.raises(ValueError, match="unknown column"):
            select_features(self._cohort(), correlation_rules=({"drop": ["Nope"]},))


class TestSigmoidAndPredict:
    def test_zero_is_half(self):
        assert sigmoid(0.0) == 0.5

    def test_one_scale_unit_above_mean(self):
        m = LogitModel(("x",), 0.0, np.array([1.0]), np.array([5.0]), np.array([2.0]))
        assert predict_proba(m, [7.0]) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)

    def test_all_zero_coefficients_give_half(self):
        m = LogitModel(("a", "b"), 0.0, np.zeros(2), np.zeros(2), np.ones(2))
        assert predict_proba(m, [123.0, -5.0]) == 0.5

    def test_fixture_hand_computation(self):
        m = LogitModel(("a", "b"), -0.5, np.array([2.0, -1.0]),
                       np.array([1.0, 3.0]), np.array([2.0, 0.5]))
        row = np.array([2.0, 3.5])
        z = -0.5 + 2.0 * (2.0 - 1.0) / 2.0 + (-1.0) * (3.5 - 3.0) / 0.5
        assert predict_proba(m, row) == pytest.approx(1 / (1 + math.exp(-z)), abs=1e-12)

    def test_extreme_values_stable(self):
        assert sigmoid(800.0) == 1.0
        assert sigmoid(-800.0) == 0.0


def simulate(beta, n, seed, intercept=0.3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, len(beta)))
    p = sigmoid(intercept + X @ np.asarray(beta))
    y = (rng.random(n) < p).astype(float)
    return X, y


class TestFit:
    def test_recovers_known_coefficients(self):
        beta = [-1.0, 2.0, 0.5]
        X, y = simulate(beta, 50000, seed=101)
        model, diag = fit_logit_arrays(X, y, ["a", "b", "c"])
        assert diag.converged
        # features are standard normal, so standardized coefs match the truth
        scaled = model.coefficients * 1.0 / model.scales
        np.testing.assert_allclose(scaled, beta, atol=0.05)

    def test_loglik_nondecreasing(self):
        X, y = simulate([1.5, -0.7], 500, seed=5)
        _, diag = fit_logit_arrays(X, y, ["a", "b"])
        path = np.array(diag.ll_path)
        assert (np.diff(path) >= -1e-10).all()

    def test_gradient_small_at_optimum(self):
        X, y = simulate([0.8, -0.3], 2000, seed=7)
        model, diag = fit_logit_arrays(X, y, ["a", "b"], tol=1e-8)
        Z = np.column_stack([np.ones(len(y)), model.standardize(X)])
        beta = np.concatenate([[model.intercept], model.coefficients])
        assert np.max(np.abs(gradient(Z, y, beta))) < 1e-8

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(20, 60))
            m = int(rng.integers(1, 4))
            Z = np.column_stack([np.ones(n), rng.normal(size=(n, m))])
            y = rng.integers(0, 2, size=n).astype(float)
            beta = rng.normal(scale=0.5, size=m + 1)
            g = gradient(Z, y, beta)
            h = 1e-6
            for j in range(m + 1):
                e = np.zeros(m + 1)
                e[j] = h
                fd = (log_likelihood(Z, y, beta + e) - log_likelihood(Z, y, beta - e)) / (2 * h)
                assert abs(g[j] - fd) / max(1.0, abs(fd)) < 1e-6

    def test_perfect_separation_detected(self):
        rng = np.random.default_rng(13)
        x = np.concatenate([rng.uniform(-2, -0.05, 60), rng.uniform(0.05, 2, 60)])[:, None]
        y = (x[:, 0] > 0).astype(float)
        with pytest.raises(PerfectSeparationError):
            fit_logit_arrays(x, y, ["x"])

    def test_duplicate_column_singular(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=(100, 1))
        X = np.column_stack([x, x])
        y = (rng.random(100) < sigmoid(x[:, 0])).astype(float)
        with pytest.raises(FitError):
            fit_logit_arrays(X, y, ["a", "b"])

    def test_single_class_errors(self):
        X = np.random.default_rng(19).normal(size=(30, 2))
        with pytest.raises(FitError, match="classes"):
            fit_logit_arrays(X, np.ones(30), ["a", "b"])

    def test_needs_more_rows_than_features(self):
        X = np.random.default_rng(19).normal(size=(3, 4))
        with pytest.raises(FitError, match="rows"):
            fit_logit_arrays(X, np.array([0.0, 1.0, 0.0]), list("abcd"))

    def test_fit_logit_standardizes_numerics_only(self):
        rng = np.random.default_rng(23)
        schema = schema_of(["num", "cat"], [NUMERICAL, CATEGORICAL])
        X = np.column_stack([rng.normal(50, 10, 300), rng.integers(0, 2, 300)])
        y = (rng.random(300) < sigmoid(0.05 * (X[:, 0] - 50) + X[:, 1] - 0.5)).astype(int)
        c = Cohort(schema, X, labels=y)
        model, _ = fit_logit(c)
        assert model.means[1] == 0.0 and model.scales[1] == 1.0
        assert model.means[0] != 0.0 and model.scales[0] != 1.0


class TestWaldArithmetic:
    def test_ci_reconstruction_all_rows(self):
        for name, coef, se, lo, hi in PUBLISHED_WALD_ROWS:
            assert coef - 1.96 * se == pytest.approx(lo, abs=0.002), name
            assert coef + 1.96 * se == pytest.approx(hi, abs=0.002), name

    def test_history_of_stroke_row_exact_to_3dp(self):
        coef, se = 2.6779, 0.247
        assert round(coef - 1.96 * se, 3) == 2.194
        assert round(coef + 1.96 * se, 3) == 3.162

    def test_fitted_diagnostics_have_consistent_columns(self):
        X, y = simulate([1.0, -0.5], 3000, seed=29)
        _, diag = fit_logit_arrays(X, y, ["a", "b"])
        np.testing.assert_allclose(diag.z_stat, diag.coef / diag.std_err, rtol=1e-12)
        np.testing.assert_allclose(diag.ci_low, diag.coef - 1.96 * diag.std_err, rtol=1e-12)
        np.testing.assert_allclose(diag.ci_high, diag.coef + 1.96 * diag.std_err, rtol=1e-12)
        assert ((diag.p_value >= 0) & (diag.p_value <= 1)).all()
        assert (diag.ci_low < diag.ci_high).all()
        assert diag.names[-1] == "constant"

    def test_coverage_of_95_ci(self):
        # smaller replication count here; the acceptance suite runs the full one
        beta = np.array([0.6, -0.4])
        hits = np.zeros(2)
        reps = 40
        for r in range(reps):
            X, y = simulate(beta, 2500, seed=1000 + r, intercept=0.0)
            _, diag = fit_logit_arrays(X, y, ["a", "b"])
            for j in range(2):
                if diag.ci_low[j] <= beta[j] <= diag.ci_high[j]:
                    hits[j] += 1
        assert (hits / reps >= 0.80).all()
