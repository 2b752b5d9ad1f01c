"""Regenerates the committed UI test fixtures by calling the inference
service's HTTP endpoints (the documented wire format) against a sign-pinned
logistic bundle. Run from the repo root:

    python3 frontend/scripts/generate_fixtures.py
"""

import itertools
import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from strokekit.bundle import ModelBundle
from strokekit.cohort import default_schema
from strokekit.logit import LogitModel
from strokekit.rules import FACTOR_COLUMNS, FACTOR_FIELDS
from strokekit.service import create_app

OUT = Path(__file__).resolve().parent.parent / "fixtures"

# Sign-pinned fixture model: smoking (and the other levers) strictly increase
# the modeled risk; HDL decreases it.
FEATURES = ("Smoking", "Physical Inactivity", "Systolic Blood Pressure", "BMI",
            "Age", "FBG", "HDL")
COEFS = np.array([0.9, 0.8, 1.2, 0.5, 0.3, 0.4, -0.6])
MEANS = np.array([0.0, 0.0, 130.0, 23.0, 55.0, 5.5, 1.4])
SCALES = np.array([1.0, 1.0, 20.0, 4.0, 12.0, 1.2, 0.3])


def fixture_bundle() -> ModelBundle:
    model = LogitModel(FEATURES, -1.5, COEFS, MEANS, SCALES)
    rng = np.random.default_rng(404)
    bg = np.column_stack([
        rng.integers(0, 2, 80).astype(float),
        rng.integers(0, 2, 80).astype(float),
        rng.normal(130, 18, 80),
        rng.normal(23, 3, 80),
        rng.normal(55, 10, 80),
        rng.normal(5.5, 1.0, 80),
        rng.normal(1.4, 0.25, 80),
    ])
    return ModelBundle(kind="logit", model=model,
                       schema=default_schema().select(list(FEATURES)),
                       target_class=1, explain_background=bg)


def label_parity_fixture(client) -> list:
    """All 1024 factor combinations with the server's label for each."""
    # the full survey schema backs this bundle so every factor column exists
    full = ModelBundle(kind="logit", model=LogitModel(
        ("Age",), 0.0, np.zeros(1), np.array([55.0]), np.array([10.0])),
        schema=default_schema(), target_class=1,
        explain_background=np.array([[55.0]]))
    full_client = TestClient(create_app(full))
    rows = []
    for combo in itertools.product([0, 1], repeat=10):
        features = {}
        for fld, on in zip(FACTOR_FIELDS, combo):
            if fld == "f6_overweight":
                features["BMI"] = 27.0 if on else 21.0
            else:
                features[FACTOR_COLUMNS[fld]] = on
        label = full_client.post("/predict", json={"features": features}).json()["risk_label"]
        rows.append({"factors": dict(zip(FACTOR_FIELDS, map(bool, combo))),
                     "features": features, "server_label": label})
    return rows


def patients_fixture(client, n=100) -> list:
    rng = np.random.default_rng(777)
    rows = []
    for i in range(n):
        features = {}
        if rng.random() < 0.9:
            features["Smoking"] = int(rng.integers(0, 2))
        if rng.random() < 0.9:
            features["Physical Inactivity"] = int(rng.integers(0, 2))
        if rng.random() < 0.95:
            features["Systolic Blood Pressure"] = float(np.round(rng.uniform(95, 200), 1))
        if rng.random() < 0.95:
            features["BMI"] = float(np.round(rng.uniform(17, 35), 1))
        if rng.random() < 0.8:
            features["Age"] = float(int(rng.uniform(30, 90)))
        if rng.random() < 0.7:
            features["FBG"] = float(np.round(rng.uniform(3.5, 12), 2))
        if rng.random() < 0.7:
            features["HDL"] = float(np.round(rng.uniform(0.7, 2.5), 2))
        payload = {"features": features}
        predict = client.post("/predict", json=payload).json()
        explain = client.post("/explain", json=payload).json()
        rows.append({"id": i, "features": features,
                     "predict": predict, "explain": explain})
    return rows


def scenario_pair_fixture(client) -> dict:
    base = {"Physical Inactivity": 1, "Systolic Blood Pressure": 150.0,
            "BMI": 27.0, "Age": 62.0, "FBG": 6.1, "HDL": 1.1}
    out = {}
    for name, smoking in (("smoker", 1), ("non_smoker", 0)):
        payload = {"features": {**base, "Smoking": smoking}}
        out[name] = {
            "features": payload["features"],
            "predict": client.post("/predict", json=payload).json(),
            "explain": client.post("/explain", json=payload).json(),
        }
    # counterfactual slider: same patient with systolic lowered
    lowered = {"features": {**base, "Smoking": 1, "Systolic Blood Pressure": 120.0}}
    out["lower_systolic"] = {
        "features": lowered["features"],
        "predict": client.post("/predict", json=lowered).json(),
        "explain": client.post("/explain", json=lowered).json(),
    }
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    bundle = fixture_bundle()
    client = TestClient(create_app(bundle))
    schema = client.get("/schema").json()

    (OUT / "schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    (OUT / "cspp_labels.json").write_text(
        json.dumps(label_parity_fixture(client), indent=2) + "\n")
    (OUT / "patients.json").write_text(
        json.dumps(patients_fixture(client), indent=2) + "\n")
    (OUT / "scenario_pair.json").write_text(
        json.dumps(scenario_pair_fixture(client), indent=2) + "\n")

    # full-survey schema for the rule-parity tests (all factor columns exist)
    full = ModelBundle(kind="logit", model=LogitModel(
        ("Age",), 0.0, np.zeros(1), np.array([55.0]), np.array([10.0])),
        schema=default_schema(), target_class=1,
        explain_background=np.array([[55.0]]))
    full_schema = TestClient(create_app(full)).get("/schema").json()
    (OUT / "full_schema.json").write_text(json.dumps(full_schema, indent=2) + "\n")
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
