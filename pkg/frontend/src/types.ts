/** Wire types, exactly as the inference service documents them. */

export interface FeatureInfo {
  name: string;
  kind: "categorical" | "numerical";
  unit?: string;
  range?: [number, number];
  category_count?: number;
}

export interface CsppThresholds {
  overweight_bmi: number;
  bmi_column: string;
  overweight_column: string;
}

export interface SchemaResponse {
  features: FeatureInfo[];
  cspp_thresholds: CsppThresholds;
  /** factor field id (f1_hypertension, ..., b_history_tia) -> column name */
  factor_columns: Record<string, string>;
  model_kind: "tree" | "forest" | "logit";
  target_class: number;
}

export interface PredictResponse {
  risk_label: "Low" | "Medium" | "High";
  probability: number;
  missing_imputed: string[];
}

export interface ExplainResponse {
  base_value: number;
  contributions: Record<string, number>;
  output_kind: string;
  missing_imputed: string[];
}

export interface ApiError {
  error: { field: string | null; reason: string };
}

/** Form cell: a number, or null when unanswered (server imputes missing). */
export type FormValue = number | null;
export type FormValues = Record<string, FormValue>;
