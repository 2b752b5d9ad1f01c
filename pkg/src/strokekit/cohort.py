"""Cohort schema, CSV ingestion, and cleansing.

Cells are stored in a float64 matrix; categorical features hold integer codes.
Missing values use the sentinel -1 for both kinds, and numerical features
treat -1 as a legal low-sorting value in downstream models. Cohorts are
immutable after construction, so they are safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

MISSING = -1.0

CATEGORICAL = "categorical"
NUMERICAL = "numerical"

# Reserved CSV columns recognized as targets rather than features.
RISK_LABEL_COLUMN = "Risk Level"
STROKE_COLUMN = "Stroke"


class SchemaError(ValueError):
    """Schema definition or schema/file mismatch problem."""


class IngestError(ValueError):
    """CSV contents violate the ingestion contract."""


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    unit: Optional[str] = None
    valid_range: Optional[tuple[float, float]] = None
    category_count: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.valid_range is not None:
            lo, hi = self.valid_range
            if not lo < hi:
                raise SchemaError(f"valid_range for {self.name!r} must have min < max")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list; the order defines column indices everywhere."""

    features: tuple[Feature, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    def feature(self, name: str) -> Feature:
        return self.features[self.index_of(name)]

    def has(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def drop(self, names: Iterable[str]) -> "FeatureSchema":
        gone = set(names)
        unknown = gone - set(self.names)
        if unknown:
            raise SchemaError(f"unknown feature(s) {sorted(unknown)}")
        return FeatureSchema(tuple(f for f in self.features if f.name not in gone))

    def select(self, names: Sequence[str]) -> "FeatureSchema":
        return FeatureSchema(tuple(self.feature(n) for n in names))

    def to_dict(self) -> dict:
        out = []
        for f in self.features:
            d = {"name": f.name, "kind": f.kind}
            if f.unit is not None:
                d["unit"] = f.unit
            if f.valid_range is not None:
                d["range"] = list(f.valid_range)
            if f.category_count is not None:
                d["category_count"] = f.category_count
            out.append(d)
        return {"features": out}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        feats = []
        for item in d["features"]:
            rng = item.get("range")
            feats.append(Feature(
                name=item["name"],
                kind=item["kind"],
                unit=item.get("unit"),
                valid_range=tuple(rng) if rng is not None else None,
                category_count=item.get("category_count"),
            ))
        return cls(tuple(feats))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _freeze(arr: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if arr is not None:
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Cohort:
    """Immutable table of resident records plus optional targets.

    ``labels`` holds risk levels (0=Low, 1=Medium, 2=High) or binary targets;
    ``stroke`` holds the hospitalized-stroke flag when a cohort carries both.
    """

    schema: FeatureSchema
    values: np.ndarray
    labels: Optional[np.ndarray] = None
    stroke: Optional[np.ndarray] = None
    parse_warnings: int = field(default=0, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.schema):
            raise SchemaError(
                f"values must be (n_rows, {len(self.schema)}), got {v.shape}")
        object.__setattr__(self, "values", _freeze(v))
        for name in ("labels", "stroke"):
            t = getattr(self, name)
            if t is not None:
                t = np.asarray(t, dtype=np.int64)
                if t.shape != (v.shape[0],):
                    raise SchemaError(f"{name} must have one entry per row")
                object.__setattr__(self, name, _freeze(t))

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index_of(name)]

    def missing_mask(self) -> np.ndarray:
        return (self.values == MISSING) | np.isnan(self.values)

    def with_values(self, values: np.ndarray, schema: Optional[FeatureSchema] = None) -> "Cohort":
        return Cohort(schema or self.schema, values, labels=self.labels,
                      stroke=self.stroke, parse_warnings=self.parse_warnings)

    def with_labels(self, labels: Optional[np.ndarray]) -> "Cohort":
        return Cohort(self.schema, self.values.copy(), labels=labels,
                      stroke=self.stroke, parse_warnings=self.parse_warnings)

    def select_rows(self, idx: np.ndarray) -> "Cohort":
        return Cohort(
            self.schema,
            self.values[idx].copy(),
            labels=None if self.labels is None else self.labels[idx].copy(),
            stroke=None if self.stroke is None else self.stroke[idx].copy(),
            parse_warnings=self.parse_warnings,
        )

    def drop_columns(self, names: Iterable[str]) -> "Cohort":
        gone = set(names)
        keep = [i for i, f in enumerate(self.schema.features) if f.name not in gone]
        return Cohort(self.schema.drop(gone), self.values[:, keep].copy(),
                      labels=self.labels, stroke=self.stroke,
                      parse_warnings=self.parse_warnings)

    def select_columns(self, names: Sequence[str]) -> "Cohort":
        idx = [self.schema.index_of(n) for n in names]
        return Cohort(self.schema.select(names), self.values[:, idx].copy(),
                      labels=self.labels, stroke=self.stroke,
                      parse_warnings=self.parse_warnings)


@dataclass(frozen=True)
class CleansingReport:
    dropped_columns: tuple[tuple[str, float], ...]
    imputed_cells: int
    corrected_bp_rows: int
    rows_in: int
    rows_out: int

    def to_dict(self) -> dict:
        return {
            "dropped_columns": [
                {"name": n, "missing_fraction": f} for n, f in self.dropped_columns
            ],
            "imputed_cells": self.imputed_cells,
            "corrected_bp_rows": self.corrected_bp_rows,
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
        }


@dataclass(frozen=True)
class CleansingConfig:
    missing_threshold: float = 0.60
    bp_correction: bool = True
    systolic_column: str = "Systolic Blood Pressure"
    diastolic_column: str = "Diastolic Blood Pressure"


def _parse_cell(raw: str, kind: str) -> tuple[float, bool]:
    """Returns (value, warned). Empty cells are missing without a warning."""
    text = raw.strip()
    if text == "":
        return MISSING, False
    try:
        value = float(text)
    except ValueError:
        return MISSING, True
    if math.isnan(value):
        return MISSING, True
    if math.isinf(value):
        raise IngestError(f"numeric cell {raw!r} outside representable range")
    if kind == CATEGORICAL:
        if not value.is_integer() or value < -1:
            return MISSING, True
        return value, False
    return value, False


def ingest_csv(path, schema: FeatureSchema) -> Cohort:
    """Parses a cohort CSV against ``schema``.

    Header names must match the schema (order-insensitive); the reserved
    columns "Risk Level" and "Stroke" are read as targets. Empty or
    unparseable cells become the -1 sentinel; unparseable non-empty cells are
    tallied in ``parse_warnings``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise IngestError(f"duplicate header column(s) {dupes}")
        known = set(schema.names) | {RISK_LABEL_COLUMN, STROKE_COLUMN}
        unknown = [h for h in header if h not in known]
        if unknown:
            raise IngestError(f"unknown column(s) {unknown}")
        absent = [n for n in schema.names if n not in header]
        if absent:
            raise IngestError(f"column absent: {absent}")

        col_pos = {name: header.index(name) for name in schema.names}
        label_pos = header.index(RISK_LABEL_COLUMN) if RISK_LABEL_COLUMN in header else None
        stroke_pos = header.index(STROKE_COLUMN) if STROKE_COLUMN in header else None

        rows: list[list[float]] = []
        labels: list[int] = []
        strokes: list[int] = []
        warnings = 0
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise IngestError(f"line {lineno}: expected {len(header)} cells, got {len(record)}")
            row = []
            for f in schema.features:
                value, warned = _parse_cell(record[col_pos[f.name]], f.kind)
                warnings += warned
                row.append(value)
            rows.append(row)
            if label_pos is not None:
                labels.append(int(float(record[label_pos])))
            if stroke_pos is not None:
                strokes.append(int(float(record[stroke_pos])))

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema))
    return Cohort(
        schema,
        values,
        labels=np.array(labels, dtype=np.int64) if label_pos is not None else None,
        stroke=np.array(strokes, dtype=np.int64) if stroke_pos is not None else None,
        parse_warnings=warnings,
    )


def write_csv(cohort: Cohort, path, float_format: str = "%.17g") -> None:
    """Writes a cohort (plus any targets) back to the canonical CSV form."""
    header = list(cohort.schema.names)
    if cohort.labels is not None:
        header.append(RISK_LABEL_COLUMN)
    if cohort.stroke is not None:
        header.append(STROKE_COLUMN)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(cohort.row_count):
            row = []
            for j, f in enumerate(cohort.schema.features):
                v = cohort.values[i, j]
                if f.kind == CATEGORICAL or float(v).is_integer():
                    row.append(str(int(v)))
                else:
                    row.append(float_format % v)
            if cohort.labels is not None:
                row.append(str(int(cohort.labels[i])))
            if cohort.stroke is not None:
                row.append(str(int(cohort.stroke[i])))
            writer.writerow(row)


def cleanse(cohort: Cohort, config: CleansingConfig = CleansingConfig()) -> tuple[Cohort, CleansingReport]:
    """Applies the cleansing rules; never deletes rows.

    Columns whose missing fraction exceeds the threshold are dropped, every
    remaining missing cell is normalized to -1, and blood-pressure pairs with
    diastolic strictly above systolic are swapped (swapping preserves both
    measurements and makes the pass idempotent).
    """
    miss = cohort.missing_mask()
    n = cohort.row_count
    frac = miss.mean(axis=0) if n else np.zeros(len(cohort.schema))

    dropped = []
    keep_idx = []
    for j, f in enumerate(cohort.schema.features):
        if frac[j] > config.missing_threshold:
            dropped.append((f.name, float(frac[j])))
        else:
            keep_idx.append(j)

    values = cohort.values[:, keep_idx].copy()
    kept_schema = FeatureSchema(tuple(cohort.schema.features[j] for j in keep_idx))
    kept_miss = miss[:, keep_idx]
    values[kept_miss] = MISSING
    imputed = int(kept_miss.sum())

    corrected = 0
    if config.bp_correction and kept_schema.has(config.systolic_column) and kept_schema.has(config.diastolic_column):
        si = kept_schema.index_of(config.systolic_column)
        di = kept_schema.index_of(config.diastolic_column)
        sys_col = values[:, si]
        dia_col = values[:, di]
        bad = (sys_col != MISSING) & (dia_col != MISSING) & (dia_col > sys_col)
        corrected = int(bad.sum())
        values[bad, si], values[bad, di] = dia_col[bad], sys_col[bad]

    report = CleansingReport(
        dropped_columns=tuple(dropped),
        imputed_cells=imputed,
        corrected_bp_rows=corrected,
        rows_in=n,
        rows_out=n,
    )
    out = Cohort(kept_schema, values, labels=cohort.labels, stroke=cohort.stroke,
                 parse_warnings=cohort.parse_warnings)
    return out, report


def split_stratified(cohort: Cohort, test_fraction: float, seed: int) -> tuple[Cohort, Cohort]:
    """Label-stratified train/test split, deterministic for a fixed seed."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if cohort.labels is None:
        raise ValueError("split_stratified requires labels")
    rng = np.random.default_rng(seed)
    test_rows: list[np.ndarray] = []
    train_rows: list[np.ndarray] = []
    for cls in np.unique(cohort.labels):
        rows = np.flatnonzero(cohort.labels == cls)
        n_test = int(math.floor(len(rows) * test_fraction + 0.5))
        if n_test == 0 or n_test == len(rows):
            raise ValueError(
                f"class {cls} has {len(rows)} rows; cannot stratify at fraction {test_fraction}")
        perm = rng.permutation(len(rows))
        test_rows.append(rows[perm[:n_test]])
        train_rows.append(rows[perm[n_test:]])
    test_idx = np.sort(np.concatenate(test_rows))
    train_idx = np.sort(np.concatenate(train_rows))
    return cohort.select_rows(train_idx), cohort.select_rows(test_idx)


def _f(name, kind, unit=None, valid_range=None, category_count=None):
    return Feature(name, kind, unit=unit, valid_range=valid_range,
                   category_count=category_count)


def default_schema() -> FeatureSchema:
    """The 34-feature survey schema used by the bundled generator and demos."""
    return FeatureSchema((
        _f("Favor", CATEGORICAL, category_count=3),
        _f("Alcohol", CATEGORICAL, category_count=2),
        _f("Frequency of Vegetables", CATEGORICAL, category_count=3),
        _f("Frequency of Fruits", CATEGORICAL, category_count=3),
        _f("Meat and Vegetables", CATEGORICAL, category_count=3),
        _f("Medical Payment Method", CATEGORICAL, category_count=3),
        _f("Sex", CATEGORICAL, category_count=2),
        _f("Age", NUMERICAL, unit="years", valid_range=(0.0, 120.0)),
        _f("BMI", NUMERICAL, unit="kg/m2", valid_range=(10.0, 60.0)),
        _f("Retire", CATEGORICAL, category_count=2),
        _f("Height", NUMERICAL, unit="cm", valid_range=(100.0, 230.0)),
        _f("Weight", NUMERICAL, unit="kg", valid_range=(25.0, 250.0)),
        _f("Ethnicity", CATEGORICAL, category_count=3),
        _f("Occupation", CATEGORICAL, category_count=6),
        _f("Marital Status", CATEGORICAL, category_count=4),
        _f("Education Level", CATEGORICAL, category_count=5),
        _f("TC", NUMERICAL, unit="mmol/L", valid_range=(1.0, 15.0)),
        _f("TG", NUMERICAL, unit="mmol/L", valid_range=(0.1, 20.0)),
        _f("HDL", NUMERICAL, unit="mmol/L", valid_range=(0.2, 5.0)),
        _f("LDL", NUMERICAL, unit="mmol/L", valid_range=(0.3, 10.0)),
        _f("HCY", NUMERICAL, unit="umol/L", valid_range=(2.0, 100.0)),
        _f("FBG", NUMERICAL, unit="mmol/L", valid_range=(2.0, 30.0)),
        _f("Pulse", NUMERICAL, unit="bpm", valid_range=(30.0, 200.0)),
        _f("Systolic Blood Pressure", NUMERICAL, unit="mmHg", valid_range=(60.0, 260.0)),
        _f("Diastolic Blood Pressure", NUMERICAL, unit="mmHg", valid_range=(30.0, 160.0)),
        _f("Smoking", CATEGORICAL, category_count=2),
        _f("Physical Inactivity", CATEGORICAL, category_count=2),
        _f("Heart Disease", CATEGORICAL, category_count=2),
        _f("Hypertension", CATEGORICAL, category_count=2),
        _f("Hyperlipidemia", CATEGORICAL, category_count=2),
        _f("History of Stroke", CATEGORICAL, category_count=2),
        _f("Diabetes Mellitus", CATEGORICAL, category_count=2),
        _f("Family History of Stroke", CATEGORICAL, category_count=2),
        _f("History of TIA", CATEGORICAL, category_count=2),
    ))
