/** Scenario comparison: probability and per-feature contribution deltas
 * between two assessed what-if states, with reversible-factor changes
 * highlighted (the ones a person can actually steer). */

import type { Assessment } from "./assess.js";
import type { FormValues } from "./types.js";

/** Lifestyle levers plus the counterfactual sliders (BP, BMI). */
export const REVERSIBLE_COLUMNS = new Set([
  "Smoking",
  "Physical Inactivity",
  "Alcohol",
  "BMI",
  "Systolic Blood Pressure",
  "Diastolic Blood Pressure",
]);

export interface FeatureDelta {
  feature: string;
  valueA: number | null;
  valueB: number | null;
  changed: boolean;
  reversible: boolean;
  contributionA: number;
  contributionB: number;
  contributionDelta: number;
}

export interface ScenarioComparison {
  probabilityA: number;
  probabilityB: number;
  probabilityDelta: number;
  labelA: string;
  labelB: string;
  deltas: FeatureDelta[];
}

export function compareScenarios(
  valuesA: FormValues,
  assessA: Assessment,
  valuesB: FormValues,
  assessB: Assessment,
): ScenarioComparison {
  const names = new Set([
    ...Object.keys(assessA.explain.contributions),
    ...Object.keys(assessB.explain.contributions),
  ]);
  const deltas: FeatureDelta[] = [];
  for (const feature of [...names]) {
    const a = assessA.explain.contributions[feature] ?? 0;
    const b = assessB.explain.contributions[feature] ?? 0;
    const va = valuesA[feature] ?? null;
    const vb = valuesB[feature] ?? null;
    deltas.push({
      feature,
      valueA: va,
      valueB: vb,
      changed: va !== vb,
      reversible: REVERSIBLE_COLUMNS.has(feature),
      contributionA: a,
      contributionB: b,
      contributionDelta: b - a,
    });
  }
  deltas.sort((x, y) => Math.abs(y.contributionDelta) - Math.abs(x.contributionDelta));
  return {
    probabilityA: assessA.predict.probability,
    probabilityB: assessB.predict.probability,
    probabilityDelta: assessB.predict.probability - assessA.predict.probability,
    labelA: assessA.predict.risk_label,
    labelB: assessB.predict.risk_label,
    deltas,
  };
}
