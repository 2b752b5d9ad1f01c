/** Client-side mirror of the server's CSPP "8+2" labeling rule.
 *
 * Duplicated only for instant feedback while the request is in flight; the
 * server stays authoritative and the UI asserts parity on every response.
 */

import type { FormValues, SchemaResponse } from "./types.js";

export const FACTOR_FIELDS = [
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
] as const;

export type FactorField = (typeof FACTOR_FIELDS)[number];
export type RiskLabel = "Low" | "Medium" | "High";

export interface DerivedFactors {
  flags: Record<FactorField, boolean>;
  imputed: FactorField[];
}

const MISSING = -1;

function present(v: number | null | undefined): v is number {
  return v !== null && v !== undefined && v !== MISSING && !Number.isNaN(v);
}

/** Reads the ten factor flags from form values; unanswered cells and factors
 * without a backing column count as absent and are reported as imputed. */
export function deriveFactors(values: FormValues, schema: SchemaResponse): DerivedFactors {
  const have = new Set(schema.features.map((f) => f.name));
  const flags = {} as Record<FactorField, boolean>;
  const imputed: FactorField[] = [];
  for (const field of FACTOR_FIELDS) {
    if (field === "f6_overweight" && !have.has(schema.cspp_thresholds.overweight_column)) {
      const bmi = values[schema.cspp_thresholds.bmi_column];
      if (present(bmi)) {
        flags[field] = bmi >= schema.cspp_thresholds.overweight_bmi;
      } else {
        flags[field] = false;
        imputed.push(field);
      }
      continue;
    }
    const column =
      field === "f6_overweight"
        ? schema.cspp_thresholds.overweight_column
        : schema.factor_columns[field];
    const v = column !== undefined && have.has(column) ? values[column] : null;
    if (present(v)) {
      flags[field] = v > 0;
    } else {
      flags[field] = false;
      imputed.push(field);
    }
  }
  return { flags, imputed };
}

/** High: three or more of factors 1-8, or either history factor.
 *  Medium: one or two of factors 1-8 with at least one of factors 1-3.
 *  Low: everything else. */
export function labelRisk(flags: Record<FactorField, boolean>): RiskLabel {
  if (flags.a_history_stroke || flags.b_history_tia) return "High";
  const main = FACTOR_FIELDS.slice(0, 8).filter((f) => flags[f]).length;
  if (main >= 3) return "High";
  const gate = flags.f1_hypertension || flags.f2_diabetes || flags.f3_heart_disease;
  if (main >= 1 && gate) return "Medium";
  return "Low";
}

export function clientLabel(values: FormValues, schema: SchemaResponse): RiskLabel {
  return labelRisk(deriveFactors(values, schema).flags);
}
