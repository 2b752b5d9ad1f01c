"""CSPP "8+2" risk labeling and cohort-level exposure statistics.

The screening taxonomy counts eight chronic/lifestyle factors plus two history
factors. High risk: three or more of factors 1-8, or either history factor.
Medium risk: one or two of factors 1-8 with at least one of factors 1-3
(hypertension, diabetes, heart disease). Everything else is low risk.
Missing (-1) cells count as factor-absent and are surfaced as provenance notes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .cohort import CATEGORICAL, Cohort, Feature, FeatureSchema, MISSING

FACTOR_FIELDS = (
    "f1_hypertension",
    "f2_diabetes",
    "f3_heart_disease",
    "f4_hyperlipidemia",
    "f5_family_history",
    "f6_overweight",
    "f7_smoking",
    "f8_physical_inactivity",
    "a_history_stroke",
    "b_history_tia",
)

FACTOR_NAMES = (
    "Hypertension",
    "Diabetes Mellitus",
    "Heart Disease",
    "Hyperlipidemia",
    "Family History of Stroke",
    "Overweight",
    "Smoking",
    "Physical Inactivity",
    "History of Stroke",
    "History of TIA",
)

# Schema column backing each factor; Overweight has no column and is derived
# from BMI when absent.
FACTOR_COLUMNS = dict(zip(FACTOR_FIELDS, FACTOR_NAMES))


class RiskLabel(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def display(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class RiskFactors:
    f1_hypertension: bool = False
    f2_diabetes: bool = False
    f3_heart_disease: bool = False
    f4_hyperlipidemia: bool = False
    f5_family_history: bool = False
    f6_overweight: bool = False
    f7_smoking: bool = False
    f8_physical_inactivity: bool = False
    a_history_stroke: bool = False
    b_history_tia: bool = False
    imputed_fields: tuple[str, ...] = field(default=(), compare=False)

    def flags(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in FACTOR_FIELDS)

    @classmethod
    def from_flags(cls, flags, imputed=()) -> "RiskFactors":
        return cls(**dict(zip(FACTOR_FIELDS, map(bool, flags))),
                   imputed_fields=tuple(imputed))


@dataclass(frozen=True)
class CsppThresholds:
    overweight_bmi: float = 24.0
    bmi_column: str = "BMI"
    overweight_column: str = "Overweight"

    def to_dict(self) -> dict:
        return {
            "overweight_bmi": self.overweight_bmi,
            "bmi_column": self.bmi_column,
            "overweight_column": self.overweight_column,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CsppThresholds":
        return cls(**{k: d[k] for k in ("overweight_bmi", "bmi_column", "overweight_column") if k in d})


def label_risk(f: RiskFactors) -> RiskLabel:
    """Maps the ten factor flags to the Low/Medium/High screening level."""
    if f.a_history_stroke or f.b_history_tia:
        return RiskLabel.HIGH
    count = sum((f.f1_hypertension, f.f2_diabetes, f.f3_heart_disease,
                 f.f4_hyperlipidemia, f.f5_family_history, f.f6_overweight,
                 f.f7_smoking, f.f8_physical_inactivity))
    if count >= 3:
        return RiskLabel.HIGH
    if count >= 1 and (f.f1_hypertension or f.f2_diabetes or f.f3_heart_disease):
        return RiskLabel.MEDIUM
    return RiskLabel.LOW


def derive_factors(row: np.ndarray, schema: FeatureSchema,
                   thresholds: CsppThresholds = CsppThresholds()) -> RiskFactors:
    """Reads the ten factor flags from one cohort row.

    Factor columns are truthy when the code is > 0. Overweight falls back to
    BMI >= threshold when no overweight column exists. Cells at the -1
    sentinel, and factors whose backing column is absent from the schema
    entirely, yield False and are recorded in ``imputed_fields``.
    """
    flags = []
    imputed = []
    for fld in FACTOR_FIELDS:
        if fld == "f6_overweight" and not schema.has(thresholds.overweight_column):
            if not schema.has(thresholds.bmi_column):
                flags.append(False)
                imputed.append(fld)
                continue
            bmi = row[schema.index_of(thresholds.bmi_column)]
            if bmi == MISSING or np.isnan(bmi):
                flags.append(False)
                imputed.append(fld)
            else:
                flags.append(bool(bmi >= thresholds.overweight_bmi))
            continue
        name = FACTOR_COLUMNS[fld] if fld != "f6_overweight" else thresholds.overweight_column
        if not schema.has(name):
            flags.append(False)
            imputed.append(fld)
            continue
        v = row[schema.index_of(name)]
        if v == MISSING or np.isnan(v):
            flags.append(False)
            imputed.append(fld)
        else:
            flags.append(bool(v > 0))
    return RiskFactors.from_flags(flags, imputed)


def factor_matrix(cohort: Cohort, thresholds: CsppThresholds = CsppThresholds()) -> np.ndarray:
    """Vectorized ``derive_factors`` over the whole cohort; (n_rows, 10) bools."""
    n = cohort.row_count
    out = np.zeros((n, len(FACTOR_FIELDS)), dtype=bool)
    for j, fld in enumerate(FACTOR_FIELDS):
        if fld == "f6_overweight" and not cohort.schema.has(thresholds.overweight_column):
            if not cohort.schema.has(thresholds.bmi_column):
                continue
            bmi = cohort.column(thresholds.bmi_column)
            present = (bmi != MISSING) & ~np.isnan(bmi)
            out[:, j] = present & (bmi >= thresholds.overweight_bmi)
            continue
        name = FACTOR_COLUMNS[fld] if fld != "f6_overweight" else thresholds.overweight_column
        if not cohort.schema.has(name):
            continue
        col = cohort.column(name)
        out[:, j] = (col != MISSING) & ~np.isnan(col) & (col > 0)
    return out


def label_matrix(factors: np.ndarray) -> np.ndarray:
    """Vectorized ``label_risk`` over an (n, 10) factor matrix; int64 levels."""
    count = factors[:, :8].sum(axis=1)
    history = factors[:, 8] | factors[:, 9]
    gate = factors[:, 0] | factors[:, 1] | factors[:, 2]
    labels = np.zeros(factors.shape[0], dtype=np.int64)
    labels[(count >= 1) & gate] = int(RiskLabel.MEDIUM)
    labels[(count >= 3) | history] = int(RiskLabel.HIGH)
    return labels


def label_cohort(cohort: Cohort, thresholds: CsppThresholds = CsppThresholds()) -> Cohort:
    """Returns the cohort with CSPP risk labels attached."""
    return cohort.with_labels(label_matrix(factor_matrix(cohort, thresholds)))


def factors_cohort(cohort: Cohort, thresholds: CsppThresholds = CsppThresholds()) -> Cohort:
    """Projects a cohort onto the ten factor columns (for the 8+2 experiments)."""
    fm = factor_matrix(cohort, thresholds)
    schema = FeatureSchema(tuple(Feature(n, CATEGORICAL, category_count=2)
                                 for n in FACTOR_NAMES))
    return Cohort(schema, fm.astype(np.float64),
                  labels=label_matrix(fm) if cohort.labels is None else cohort.labels,
                  stroke=cohort.stroke)


@dataclass(frozen=True)
class CohortStats:
    factor_names: tuple[str, ...]
    exposure_rate: tuple[float, ...]
    risk_attribution: tuple[Optional[float], ...]

    def to_dict(self) -> dict:
        return {
            "factors": [
                {"name": n, "exposure_rate": e, "risk_attribution": ra}
                for n, e, ra in zip(self.factor_names, self.exposure_rate,
                                    self.risk_attribution)
            ]
        }


def cohort_stats(cohort: Cohort, thresholds: CsppThresholds = CsppThresholds()) -> CohortStats:
    """Exposure rate and risk attribution per factor.

    Risk attribution compares a factor's incidence among residents with a
    stroke history against the rest; it is undefined (None) for the two
    history factors and whenever either group is empty or the no-history
    incidence is zero.
    """
    if cohort.row_count == 0:
        raise ValueError("empty cohort")
    fm = factor_matrix(cohort, thresholds)
    exposure = fm.mean(axis=0)
    has_history = fm[:, FACTOR_FIELDS.index("a_history_stroke")]
    ras: list[Optional[float]] = []
    for j, fld in enumerate(FACTOR_FIELDS):
        if fld in ("a_history_stroke", "b_history_tia"):
            ras.append(None)
            continue
        if not has_history.any() or has_history.all():
            ras.append(None)
            continue
        with_h = fm[has_history, j].mean()
        without_h = fm[~has_history, j].mean()
        ras.append(float(with_h / without_h) if without_h > 0 else None)
    return CohortStats(FACTOR_NAMES, tuple(map(float, exposure)), tuple(ras))
