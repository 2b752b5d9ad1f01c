"""Read-only JSON inference service over a model bundle.

Endpoints:

* ``GET /schema`` - feature list (name/kind/unit/range), CSPP thresholds, the
  factor-to-column map the client rule mirror needs, and the model kind.
* ``POST /predict`` ``{"features": {name: value}}`` - CSPP risk label, the
  model probability, and which features were imputed as missing.
* ``POST /explain`` same payload - SHAP base value and per-feature
  contributions for the bundle's target class.

Responses are deterministic for a fixed bundle; nothing mutates it. Payload
problems return 400 with the offending field named; out-of-range numerics
return 422.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .bundle import ModelBundle
from .cohort import CATEGORICAL, MISSING
from .explain import exact_shapley, tree_shap
from .logit import LogitModel
from .rules import FACTOR_COLUMNS, FACTOR_FIELDS, derive_factors, label_risk


class PayloadError(Exception):
    def __init__(self, status: int, field: Optional[str], reason: str):
        super().__init__(reason)
        self.status = status
        self.field = field
        self.reason = reason

    def response(self) -> JSONResponse:
        return JSONResponse(status_code=self.status,
                            content={"error": {"field": self.field,
                                               "reason": self.reason}})


def _assemble_row(bundle: ModelBundle, payload) -> tuple[np.ndarray, list[str]]:
    if not isinstance(payload, dict) or not isinstance(payload.get("features"), dict):
        raise PayloadError(400, None, "body must be {\"features\": {name: value}}")
    features = payload["features"]
    schema = bundle.schema
    known = set(schema.names)
    for name in features:
        if name not in known:
            raise PayloadError(400, name, "unknown feature")
    row = np.full(len(schema), MISSING)
    missing = []
    for i, f in enumerate(schema.features):
        if f.name not in features or features[f.name] is None:
            missing.append(f.name)
            continue
        value = features[f.name]
        if isinstance(value, bool):
            value = int(value)
        if not isinstance(value, (int, float)):
            raise PayloadError(400, f.name, "value must be numeric")
        value = float(value)
        if not math.isfinite(value):
            raise PayloadError(400, f.name, "value must be a finite number")
        if value == MISSING:
            missing.append(f.name)
            row[i] = MISSING
            continue
        if f.kind == CATEGORICAL and (value != int(value) or value < -1):
            raise PayloadError(400, f.name, "categorical value must be an integer code >= -1")
        if f.valid_range is not None:
            lo, hi = f.valid_range
            if not lo <= value <= hi:
                raise PayloadError(422, f.name, f"out of range [{lo}, {hi}]")
        row[i] = value
    return row, missing


def _model_columns(bundle: ModelBundle) -> Optional[list[int]]:
    """Schema indices backing the model's inputs; logit bundles may carry a
    wider schema than the regression's feature list (raw survey columns keep
    the rule replay working)."""
    if isinstance(bundle.model, LogitModel):
        return [bundle.schema.index_of(n) for n in bundle.model.feature_names]
    return None


def _probability(bundle: ModelBundle, row: np.ndarray) -> float:
    if isinstance(bundle.model, LogitModel):
        cols = _model_columns(bundle)
        return float(bundle.model.predict_matrix(row[cols][None, :])[0])
    return float(bundle.model.predict_proba(row[None, :])[0, bundle.target_class])


def create_app(bundle: ModelBundle, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="stroke risk service", docs_url=None, redoc_url=None)
    _model_columns(bundle)  # validates that model features exist in the schema

    schema_payload = {
        "features": bundle.schema.to_dict()["features"],
        "cspp_thresholds": bundle.cspp_thresholds.to_dict(),
        "factor_columns": {field: FACTOR_COLUMNS[field] for field in FACTOR_FIELDS},
        "model_kind": bundle.kind,
        "target_class": bundle.target_class,
    }

    @app.exception_handler(PayloadError)
    async def payload_error_handler(request: Request, exc: PayloadError):
        return exc.response()

    @app.get("/schema")
    async def get_schema():
        return schema_payload

    @app.post("/predict")
    async def predict(request: Request):
        payload = await _json_body(request)
        row, missing = _assemble_row(bundle, payload)
        factors = derive_factors(row, bundle.schema, bundle.cspp_thresholds)
        label = label_risk(factors)
        return {
            "risk_label": label.display,
            "probability": _probability(bundle, row),
            "missing_imputed": missing,
        }

    @app.post("/explain")
    async def explain(request: Request):
        payload = await _json_body(request)
        row, missing = _assemble_row(bundle, payload)
        if isinstance(bundle.model, LogitModel):
            if bundle.explain_background is None:
                raise PayloadError(400, None, "bundle carries no explanation background")
            cols = _model_columns(bundle)
            e = exact_shapley(bundle.model, row[cols], bundle.explain_background,
                              bundle.target_class)
            names = bundle.model.feature_names
        else:
            e = tree_shap(bundle.model, row, bundle.target_class)
            names = bundle.schema.names
        return {
            "base_value": e.base_value,
            "contributions": dict(zip(names, map(float, e.contributions))),
            "output_kind": e.output_kind,
            "missing_imputed": missing,
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


async def _json_body(request: Request):
    try:
        return await request.json()
    except Exception:
        raise PayloadError(400, None, "body must be valid JSON") from None
