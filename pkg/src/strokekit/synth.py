"""Seedable synthetic resident cohorts calibrated to published exposure rates.

The generator stands in for the unavailable census data: factor columns are
Bernoulli draws at the calibrated rates, numeric measurements come from
truncated normals conditioned on their coupled factors (hypertensive rows get
a shifted blood-pressure distribution, and so on), and a documented
ground-truth logistic model emits the latent hospitalized-stroke flag. All of
it is synthetic construction; none of it is survey data. Draws happen
column-by-column in a fixed order from one seeded generator, so a seed pins
the cohort bytes exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .cohort import Cohort, FeatureSchema, default_schema
from .logit import sigmoid
from .rules import FACTOR_COLUMNS, FACTOR_FIELDS, factor_matrix, label_matrix

# Table-calibrated per-factor exposure targets.
DEFAULT_EXPOSURE = {
    "f1_hypertension": 0.5158,
    "f2_diabetes": 0.0709,
    "f3_heart_disease": 0.0052,
    "f4_hyperlipidemia": 0.3765,
    "f5_family_history": 0.0999,
    "f6_overweight": 0.3373,
    "f7_smoking": 0.2058,
    "f8_physical_inactivity": 0.3892,
    "a_history_stroke": 0.0483,
    "b_history_tia": 0.0023,
}

# Log-odds weights tying the stroke-history flag to the other factors, so the
# risk-attribution directions look epidemiologically sane (diabetes up,
# hyperlipidemia/overweight down). The intercept is solved per cohort to hit
# the marginal exposure target.
DEFAULT_HISTORY_COUPLING = {
    "f1_hypertension": 0.2,
    "f2_diabetes": 1.0,
    "f3_heart_disease": 1.2,
    "f4_hyperlipidemia": -0.6,
    "f5_family_history": 0.5,
    "f6_overweight": -0.4,
    "f7_smoking": 0.5,
    "f8_physical_inactivity": 0.6,
}

# (mean, sd) without / with the coupled factor, truncation bounds, factor.
DEFAULT_NUMERIC_SPECS = {
    # Systolic is a near-exact hypertension readout (BP measurement is the
    # diagnostic basis of the flag); diastolic echoes it through a noisy
    # pulse-pressure gap.
    "Systolic Blood Pressure": {"base": [114.0, 8.0], "flagged": [160.0, 8.0],
                                "bounds": [85.0, 240.0], "factor": "f1_hypertension"},
    "BMI": {"base": [21.5, 1.8], "flagged": [27.5, 2.5],
            "bounds": [15.0, 23.9], "flagged_bounds": [24.0, 45.0],
            "factor": "f6_overweight"},
    "FBG": {"base": [5.2, 0.6], "flagged": [8.6, 1.7],
            "bounds": [3.0, 6.9], "flagged_bounds": [6.5, 25.0],
            "factor": "f2_diabetes"},
    # TC is the clean hyperlipidemia proxy; TG/HDL/LDL carry weaker, partly
    # redundant echoes of it (HDL shifted down, so its risk link is negative).
    "TC": {"base": [4.6, 0.7], "flagged": [6.3, 0.8],
           "bounds": [2.5, 14.0], "factor": "f4_hyperlipidemia"},
    "TG": {"base": [1.3, 0.5], "flagged": [1.7, 0.6],
           "bounds": [0.2, 15.0], "factor": "f4_hyperlipidemia"},
    "HDL": {"base": [1.5, 0.25], "flagged": [1.25, 0.25],
            "bounds": [0.4, 3.5], "factor": "f4_hyperlipidemia"},
    "LDL": {"base": [2.6, 0.6], "flagged": [3.0, 0.65],
            "bounds": [0.5, 9.0], "factor": "f4_hyperlipidemia"},
}

# Ground-truth stroke model (log-odds). Centered numeric terms keep the
# intercept interpretable as the baseline log-odds for a factor-free resident.
DEFAULT_OUTCOME_COEFFICIENTS = {
    "intercept": -3.3,
    "Systolic Blood Pressure": [0.032, 120.0],
    "Diastolic Blood Pressure": [0.018, 78.0],
    "BMI": [0.085, 21.5],
    "FBG": [0.16, 5.2],
    "TG": [0.22, 1.3],
    "HDL": [-0.9, 1.5],
    "Age": [0.02, 54.0],
    "f8_physical_inactivity": 1.1,
    "f7_smoking": 0.9,
    "a_history_stroke": 2.6,
    "f5_family_history": 0.7,
    "f2_diabetes": 0.5,
    "f3_heart_disease": 0.6,
    "f4_hyperlipidemia": 0.35,
    "b_history_tia": 1.2,
}


class CouplingError(ValueError):
    """All probability mass escaped a truncation window."""


@dataclass(frozen=True)
class CalibrationTargets:
    exposure: dict = field(default_factory=lambda: dict(DEFAULT_EXPOSURE))
    history_coupling: dict = field(default_factory=lambda: dict(DEFAULT_HISTORY_COUPLING))
    numeric_specs: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_NUMERIC_SPECS)))
    outcome_coefficients: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_OUTCOME_COEFFICIENTS)))

    def __post_init__(self):
        for name, rate in self.exposure.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"exposure target for {name} must be in [0, 1]")
        for name, spec in self.numeric_specs.items():
            lo, hi = spec["bounds"]
            if not lo < hi:
                raise ValueError(f"bounds for {name} must be ordered")
            if spec["base"][1] <= 0 or (spec.get("flagged") and spec["flagged"][1] <= 0):
                raise ValueError(f"sd for {name} must be positive")

    def to_dict(self) -> dict:
        return {
            "exposure": dict(self.exposure),
            "history_coupling": dict(self.history_coupling),
            "numeric_specs": self.numeric_specs,
            "outcome_coefficients": self.outcome_coefficients,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationTargets":
        base = cls()
        return cls(
            exposure={**base.exposure, **d.get("exposure", {})},
            history_coupling={**base.history_coupling, **d.get("history_coupling", {})},
            numeric_specs={**base.numeric_specs, **d.get("numeric_specs", {})},
            outcome_coefficients={**base.outcome_coefficients, **d.get("outcome_coefficients", {})},
        )

    @classmethod
    def load(cls, path) -> "CalibrationTargets":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def truncated_normal(rng, mean, sd, lo, hi, max_rounds: int = 50) -> np.ndarray:
    """Truncated normal draws: vectorized rejection, inverse-CDF fallback.

    The fallback maps a uniform draw through the normal quantile function,
    working in whichever tail is nearer so far-out windows keep precision.
    """
    mean, sd, lo, hi = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (mean, sd, lo, hi)))
    out = rng.normal(mean, sd)
    bad = (out < lo) | (out > hi)
    rounds = 0
    while bad.any() and rounds < max_rounds:
        out[bad] = rng.normal(mean[bad], sd[bad])
        bad = (out < lo) | (out > hi)
        rounds += 1
    if bad.any():
        zlo = (lo[bad] - mean[bad]) / sd[bad]
        zhi = (hi[bad] - mean[bad]) / sd[bad]
        upper_tail = zlo > 0
        # upper tail: u in (sf(zhi), sf(zlo)) and z = -ndtri(u); else direct
        a = np.where(upper_tail, ndtr(-zhi), ndtr(zlo))
        b = np.where(upper_tail, ndtr(-zlo), ndtr(zhi))
        if np.any(b - a <= 0):
            raise CouplingError("no probability mass inside the truncation bounds")
        u = rng.uniform(a, b)
        z = np.where(upper_tail, -ndtri(u), ndtri(u))
        out[bad] = mean[bad] + sd[bad] * z
    return out


def _solve_history_intercept(logits_wo_intercept: np.ndarray, target: float) -> float:
    """Bisection for the intercept making mean(sigmoid(c + l)) == target."""
    lo, hi = -30.0, 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sigmoid(logits_wo_intercept + mid).mean() < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _conditional_normal(rng, flag, spec):
    base_m, base_s = spec["base"]
    lo, hi = spec["bounds"]
    if spec.get("flagged") is None:
        return truncated_normal(rng, base_m, base_s,
                                np.full(flag.shape, lo), np.full(flag.shape, hi))
    flag_m, flag_s = spec["flagged"]
    flo, fhi = spec.get("flagged_bounds", spec["bounds"])
    mean = np.where(flag, flag_m, base_m)
    sd = np.where(flag, flag_s, base_s)
    low = np.where(flag, flo, lo)
    high = np.where(flag, fhi, hi)
    return truncated_normal(rng, mean, sd, low, high)


def generate_cohort(targets: CalibrationTargets = CalibrationTargets(),
                    n: int = 25000, seed: int = 0,
                    schema: Optional[FeatureSchema] = None) -> Cohort:
    """Generates n residents with CSPP labels and a latent stroke outcome."""
    if n < 1:
        raise ValueError("n must be >= 1")
    schema = schema or default_schema()
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}

    # 1. Factor flags (overweight stays latent; BMI encodes it).
    flags: dict[str, np.ndarray] = {}
    for fld in FACTOR_FIELDS:
        if fld == "a_history_stroke":
            continue
        flags[fld] = rng.random(n) < targets.exposure[fld]
    hist_logit = np.zeros(n)
    for fld, w in targets.history_coupling.items():
        hist_logit += w * flags[fld]
    intercept = _solve_history_intercept(hist_logit, targets.exposure["a_history_stroke"])
    flags["a_history_stroke"] = rng.random(n) < sigmoid(hist_logit + intercept)

    for fld in FACTOR_FIELDS:
        if fld == "f6_overweight":
            continue  # no survey column; derived from BMI downstream
        cols[FACTOR_COLUMNS[fld]] = flags[fld].astype(np.float64)

    # 2. Numeric measurements conditioned on their factors.
    for name, spec in targets.numeric_specs.items():
        cols[name] = _conditional_normal(rng, flags.get(spec.get("factor"), np.zeros(n, bool)), spec)

    # Pulse-pressure gap keeps diastolic strictly below systolic and inside
    # the declared diastolic range for any systolic in [85, 240].
    sys_bp = cols["Systolic Blood Pressure"]
    gap = truncated_normal(rng, 42.0, 13.0,
                           np.maximum(12.0, sys_bp - 160.0),
                           np.minimum(95.0, sys_bp - 40.0))
    cols["Diastolic Blood Pressure"] = sys_bp - gap

    cols["Age"] = truncated_normal(
        rng,
        54.0 + 6.0 * flags["f1_hypertension"] + 5.0 * flags["f2_diabetes"]
        + 8.0 * flags["a_history_stroke"],
        11.0, np.full(n, 25.0), np.full(n, 95.0))
    cols["HCY"] = truncated_normal(rng, 14.5 + 4.0 * flags["f1_hypertension"], 5.0,
                                   np.full(n, 4.0), np.full(n, 80.0))
    cols["Pulse"] = truncated_normal(rng, 76.0 + 4.0 * flags["f3_heart_disease"], 10.0,
                                     np.full(n, 40.0), np.full(n, 180.0))

    sex = (rng.random(n) < 0.48).astype(np.float64)
    cols["Sex"] = sex
    cols["Height"] = truncated_normal(rng, np.where(sex > 0, 170.0, 160.0), 7.0,
                                      np.full(n, 140.0), np.full(n, 205.0))
    cols["Weight"] = np.clip(
        cols["BMI"] * (cols["Height"] / 100.0) ** 2 + rng.normal(0.0, 0.4, n),
        26.0, 249.0)

    # 3. Lifestyle / demographic categoricals.
    cols["Favor"] = rng.choice(3, size=n, p=[0.5, 0.3, 0.2]).astype(np.float64)
    cols["Alcohol"] = (rng.random(n) < np.where(flags["f7_smoking"], 0.45, 0.22)).astype(np.float64)
    cols["Frequency of Vegetables"] = rng.choice(3, size=n, p=[0.2, 0.3, 0.5]).astype(np.float64)
    cols["Frequency of Fruits"] = rng.choice(3, size=n, p=[0.3, 0.4, 0.3]).astype(np.float64)
    cols["Meat and Vegetables"] = rng.choice(3, size=n, p=[0.25, 0.5, 0.25]).astype(np.float64)
    cols["Medical Payment Method"] = rng.choice(3, size=n, p=[0.6, 0.3, 0.1]).astype(np.float64)
    cols["Retire"] = (rng.random(n) < np.where(cols["Age"] >= 60.0, 0.8, 0.1)).astype(np.float64)
    cols["Ethnicity"] = rng.choice(3, size=n, p=[0.97, 0.02, 0.01]).astype(np.float64)
    cols["Occupation"] = rng.choice(6, size=n, p=[0.25, 0.2, 0.2, 0.15, 0.1, 0.1]).astype(np.float64)
    cols["Marital Status"] = rng.choice(4, size=n, p=[0.7, 0.1, 0.1, 0.1]).astype(np.float64)
    cols["Education Level"] = rng.choice(5, size=n, p=[0.15, 0.3, 0.3, 0.15, 0.1]).astype(np.float64)

    # 4. Latent stroke outcome from the documented ground-truth model.
    coeffs = targets.outcome_coefficients
    logit = np.full(n, float(coeffs["intercept"]))
    for key, val in coeffs.items():
        if key == "intercept":
            continue
        if key in cols:
            w, center = val
            logit += w * (cols[key] - center)
        else:
            logit += float(val) * flags[key]
    stroke = (rng.random(n) < sigmoid(logit)).astype(np.int64)

    values = np.column_stack([cols[f.name] for f in schema.features])
    cohort = Cohort(schema, values, stroke=stroke)
    labels = label_matrix(factor_matrix(cohort))
    return Cohort(schema, values, labels=labels, stroke=stroke)
