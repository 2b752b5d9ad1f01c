import { describe, expect, test } from "vitest";

import { checkParity, explanationTotal } from "../src/assess.js";
import { clientLabel } from "../src/rules.js";
import { contributionBars, formatProbability } from "../src/render.js";
import { loadFixture, modelSchema, type PatientFixture } from "./helpers.js";

const schema = modelSchema();
const patients = loadFixture<PatientFixture[]>("patients.json");

describe("explanation integrity on recorded fixtures", () => {
  test("fixture set has 100 patients", () => {
    expect(patients).toHaveLength(100);
  });

  test("contribution bars plus base equal the displayed probability (1e-6)", () => {
    for (const p of patients) {
      const total = explanationTotal(p.explain);
      expect(Math.abs(total - p.predict.probability), `patient ${p.id}`).toBeLessThan(1e-6);
    }
  });

  test("rendered bar values are exactly the server contributions", () => {
    for (const p of patients.slice(0, 10)) {
      const bars = contributionBars(p.explain.contributions, 99);
      for (const bar of bars) {
        expect(bar.value).toBe(p.explain.contributions[bar.feature]);
      }
    }
  });

  test("client rule label agrees with the recorded server label", () => {
    for (const p of patients) {
      const mine = clientLabel({ ...p.features }, schema);
      expect(checkParity(mine, p.predict), `patient ${p.id}`).toBe(true);
    }
  });

  test("missing_imputed echoes exactly the unanswered fields", () => {
    for (const p of patients) {
      const answered = new Set(Object.keys(p.features));
      const expected = schema.features.map((f) => f.name).filter((n) => !answered.has(n));
      expect(p.predict.missing_imputed).toEqual(expected);
    }
  });
});

describe("parity checking", () => {
  test("a mismatched label is surfaced, not hidden", () => {
    const fake = { risk_label: "High", probability: 0.5, missing_imputed: [] } as const;
    expect(checkParity("Low", fake)).toBe(false);
    expect(checkParity("High", fake)).toBe(true);
  });
});

describe("display-only math", () => {
  test("probability formatting is presentation only", () => {
    expect(formatProbability(0.8389)).toBe("83.9%");
    expect(formatProbability(0)).toBe("0.0%");
  });

  test("bars scale by the largest magnitude and keep signs", () => {
    const bars = contributionBars({ a: 0.2, b: -0.1, c: 0.05 });
    expect(bars[0]).toMatchObject({ feature: "a", width: 1, positive: true });
    expect(bars[1]?.feature).toBe("b");
    expect(bars[1]?.width).toBeCloseTo(-0.5, 12);
    expect(bars[1]?.positive).toBe(false);
  });
});
