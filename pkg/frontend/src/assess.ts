/** Live assessment: client rule label immediately, server probability and
 * contributions on response, with the rule-parity check surfaced as data. */

import type { Api } from "./api.js";
import { clientLabel, type RiskLabel } from "./rules.js";
import type { ExplainResponse, FormValues, PredictResponse, SchemaResponse } from "./types.js";

export interface Assessment {
  clientLabel: RiskLabel;
  predict: PredictResponse;
  explain: ExplainResponse;
  /** base + sum(contributions): must equal predict.probability (local accuracy). */
  explainedProbability: number;
  /** client label == server label; a violation is a bug banner, never hidden */
  ruleParity: boolean;
}

export function explanationTotal(explain: ExplainResponse): number {
  let total = explain.base_value;
  for (const v of Object.values(explain.contributions)) total += v;
  return total;
}

export function checkParity(client: RiskLabel, server: PredictResponse): boolean {
  return client === server.risk_label;
}

export async function assess(
  api: Api,
  values: FormValues,
  schema: SchemaResponse,
  payload: { features: Record<string, number> },
  signal?: AbortSignal,
): Promise<Assessment> {
  const instant = clientLabel(values, schema);
  const [predict, explain] = await Promise.all([
    api.predict(payload, signal),
    api.explain(payload, signal),
  ]);
  return {
    clientLabel: instant,
    predict,
    explain,
    explainedProbability: explanationTotal(explain),
    ruleParity: checkParity(instant, predict),
  };
}
