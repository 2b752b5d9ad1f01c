import numpy as np
import pytest
from fastapi.testclient import TestClient

from strokekit.bundle import ModelBundle
from strokekit.cohort import default_schema
from strokekit.forest import fit_forest
from strokekit.logit import LogitModel
from strokekit.rules import FACTOR_COLUMNS
from strokekit.service import create_app
from strokekit.synth import generate_cohort
from strokekit.tree import TrainConfig


@pytest.fixture(scope="module")
def forest_bundle():
    c = generate_cohort(n=700, seed=21)
    model = fit_forest(c, TrainConfig(n_trees=8, max_depth=5, seed=2))
    return ModelBundle(kind="forest", model=model, schema=c.schema, target_class=2)


@pytest.fixture(scope="module")
def logit_bundle():
    # sign-pinned fixture: smoking strictly increases the modeled risk
    names = ("Smoking", "Systolic Blood Pressure", "BMI", "Age")
    model = LogitModel(
        feature_names=names,
        intercept=-2.0,
        coefficients=np.array([0.9, 1.2, 0.5, 0.3]),
        means=np.array([0.0, 130.0, 23.0, 55.0]),
        scales=np.array([1.0, 20.0, 4.0, 12.0]),
    )
    schema = default_schema().select(list(names))
    rng = np.random.default_rng(5)
    bg = np.column_stack([
        rng.integers(0, 2, 60).astype(float),
        rng.normal(130, 20, 60),
        rng.normal(23, 3, 60),
        rng.normal(55, 10, 60),
    ])
    return ModelBundle(kind="logit", model=model, schema=schema, target_class=1,
                       explain_background=bg)


@pytest.fixture(scope="module")
def client(forest_bundle):
    return TestClient(create_app(forest_bundle))


@pytest.fixture(scope="module")
def logit_client(logit_bundle):
    return TestClient(create_app(logit_bundle))


class TestSchema:
    def test_schema_lists_features_and_thresholds(self, client):
        r = client.get("/schema")
        assert r.status_code == 200
        body = r.json()
        assert len(body["features"]) == 34
        assert body["cspp_thresholds"]["overweight_bmi"] == 24.0
        assert body["factor_columns"]["f1_hypertension"] == "Hypertension"
        assert body["model_kind"] == "forest"


class TestPredict:
    def test_all_factors_false_is_low(self, client):
        payload = {"features": {FACTOR_COLUMNS[f]: 0 for f in FACTOR_COLUMNS
                                if f != "f6_overweight"}}
        payload["features"]["BMI"] = 21.0
        r = client.post("/predict", json=payload)
        assert r.status_code == 200
        body = r.json()
        assert body["risk_label"] == "Low"
        assert 0.0 <= body["probability"] <= 1.0

    def test_three_factors_high(self, client):
        r = client.post("/predict", json={"features": {
            "Hypertension": 1, "Diabetes Mellitus": 1, "Smoking": 1}})
        assert r.json()["risk_label"] == "High"

    def test_omitted_feature_listed_as_imputed(self, client):
        r = client.post("/predict", json={"features": {"Hypertension": 1}})
        body = r.json()
        assert "TG" in body["missing_imputed"]
        assert "Hypertension" not in body["missing_imputed"]

    def test_unknown_feature_400_names_field(self, client):
        r = client.post("/predict", json={"features": {"Bogus": 1}})
        assert r.status_code == 400
        assert r.json()["error"]["field"] == "Bogus"

    def test_non_numeric_400(self, client):
        r = client.post("/predict", json={"features": {"BMI": "heavy"}})
        assert r.status_code == 400
        assert r.json()["error"]["field"] == "BMI"

    def test_out_of_range_422(self, client):
        r = client.post("/predict", json={"features": {"BMI": 300.0}})
        assert r.status_code == 422
        assert r.json()["error"]["field"] == "BMI"

    def test_malformed_body_400(self, client):
        r = client.post("/predict", json={"rows": []})
        assert r.status_code == 400

    def test_non_integer_categorical_400(self, client):
        r = client.post("/predict", json={"features": {"Smoking": 0.5}})
        assert r.status_code == 400

    def test_sub_sentinel_categorical_400(self, client):
        r = client.post("/predict", json={"features": {"Smoking": -5}})
        assert r.status_code == 400
        assert r.json()["error"]["field"] == "Smoking"

    def test_nan_numeric_400(self, client):
        r = client.post("/predict", content='{"features": {"BMI": NaN}}',
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_explicit_sentinel_treated_as_missing(self, client):
        r = client.post("/predict", json={"features": {"TG": -1}})
        assert r.status_code == 200
        assert "TG" in r.json()["missing_imputed"]

    def test_boolean_values_accepted_as_codes(self, client):
        r = client.post("/predict", json={"features": {"Hypertension": True}})
        assert r.status_code == 200
        assert r.json()["risk_label"] == "Medium"


class TestExplain:
    def test_contributions_sum_to_predict_probability(self, client):
        payload = {"features": {"Hypertension": 1, "Smoking": 1, "BMI": 27.0,
                                "Systolic Blood Pressure": 160.0}}
        p = client.post("/predict", json=payload).json()["probability"]
        e = client.post("/explain", json=payload).json()
        total = e["base_value"] + sum(e["contributions"].values())
        assert abs(total - p) < 1e-9

    def test_logit_bundle_exact_shapley(self, logit_client):
        payload = {"features": {"Smoking": 1, "Systolic Blood Pressure": 150.0,
                                "BMI": 26.0, "Age": 60.0}}
        p = logit_client.post("/predict", json=payload).json()["probability"]
        e = logit_client.post("/explain", json=payload).json()
        total = e["base_value"] + sum(e["contributions"].values())
        assert abs(total - p) < 1e-9

    def test_smoking_off_lowers_probability(self, logit_client):
        base = {"Systolic Blood Pressure": 150.0, "BMI": 26.0, "Age": 60.0}
        with_smoke = logit_client.post(
            "/predict", json={"features": {**base, "Smoking": 1}}).json()["probability"]
        without = logit_client.post(
            "/predict", json={"features": {**base, "Smoking": 0}}).json()["probability"]
        assert without < with_smoke


class TestStatelessness:
    def test_1000_mixed_calls_permutation_invariant(self, client):
        # 250 payloads x {predict, explain} x {serial, shuffled} = 1000 calls
        rng = np.random.default_rng(9)
        payloads = []
        for _ in range(250):
            feats = {"Hypertension": int(rng.integers(0, 2)),
                     "Smoking": int(rng.integers(0, 2)),
                     "BMI": float(np.round(rng.uniform(18, 32), 2))}
            payloads.append({"features": feats})
        serial = [(client.post("/predict", json=p).json(),
                   client.post("/explain", json=p).json()) for p in payloads]
        order = rng.permutation(len(payloads))
        shuffled = {}
        for i in order:
            shuffled[int(i)] = (client.post("/predict", json=payloads[i]).json(),
                                client.post("/explain", json=payloads[i]).json())
        for i in range(len(payloads)):
            assert serial[i] == shuffled[i]
