import { describe, expect, test } from "vitest";

import { FACTOR_FIELDS, clientLabel, deriveFactors, labelRisk } from "../src/rules.js";
import type { FormValues } from "../src/types.js";
import { fullSchema, loadFixture, type LabelFixtureRow } from "./helpers.js";

const schema = fullSchema();
const parityRows = loadFixture<LabelFixtureRow[]>("cspp_labels.json");

describe("rule parity with the server", () => {
  test("fixture covers every factor combination", () => {
    expect(parityRows).toHaveLength(1024);
    const seen = new Set(parityRows.map((r) => JSON.stringify(r.factors)));
    expect(seen.size).toBe(1024);
  });

  test("client label equals server label on all 1024 combinations", () => {
    for (const row of parityRows) {
      const values: FormValues = { ...row.features };
      expect(clientLabel(values, schema), JSON.stringify(row.factors)).toBe(row.server_label);
    }
  });

  test("derived flags match the fixture's factor booleans", () => {
    for (const row of parityRows.slice(0, 64)) {
      const derived = deriveFactors({ ...row.features }, schema);
      for (const field of FACTOR_FIELDS) {
        expect(derived.flags[field], field).toBe(row.factors[field]);
      }
    }
  });
});

describe("labelRisk rule shape", () => {
  const flags = (on: string[]) => {
    const out = Object.fromEntries(FACTOR_FIELDS.map((f) => [f, false])) as Record<
      (typeof FACTOR_FIELDS)[number],
      boolean
    >;
    for (const f of on) (out as Record<string, boolean>)[f] = true;
    return out;
  };

  test("three main factors are high risk", () => {
    expect(labelRisk(flags(["f1_hypertension", "f2_diabetes", "f7_smoking"]))).toBe("High");
  });

  test("either history factor alone is high risk", () => {
    expect(labelRisk(flags(["a_history_stroke"]))).toBe("High");
    expect(labelRisk(flags(["b_history_tia"]))).toBe("High");
  });

  test("single gate factor is medium", () => {
    expect(labelRisk(flags(["f1_hypertension"]))).toBe("Medium");
  });

  test("two non-gate factors stay low", () => {
    expect(labelRisk(flags(["f4_hyperlipidemia", "f7_smoking"]))).toBe("Low");
  });

  test("nothing set is low", () => {
    expect(labelRisk(flags([]))).toBe("Low");
  });

  test("adding a factor never lowers the label", () => {
    const order = { Low: 0, Medium: 1, High: 2 };
    for (const row of parityRows) {
      const base = labelRisk(row.factors as Parameters<typeof labelRisk>[0]);
      for (const field of FACTOR_FIELDS) {
        if (row.factors[field]) continue;
        const raised = { ...row.factors, [field]: true };
        expect(order[labelRisk(raised as Parameters<typeof labelRisk>[0])]).toBeGreaterThanOrEqual(
          order[base],
        );
      }
    }
  });
});

describe("missing handling", () => {
  test("unanswered factors read as absent and are reported imputed", () => {
    const derived = deriveFactors({}, schema);
    expect(Object.values(derived.flags).every((v) => !v)).toBe(true);
    expect(derived.imputed).toHaveLength(10);
    expect(clientLabel({}, schema)).toBe("Low");
  });

  test("overweight falls back to the BMI threshold", () => {
    expect(deriveFactors({ BMI: 27 }, schema).flags.f6_overweight).toBe(true);
    expect(deriveFactors({ BMI: 24 }, schema).flags.f6_overweight).toBe(true);
    expect(deriveFactors({ BMI: 21 }, schema).flags.f6_overweight).toBe(false);
  });

  test("sentinel -1 counts as missing", () => {
    const derived = deriveFactors({ Smoking: -1 }, schema);
    expect(derived.flags.f7_smoking).toBe(false);
    expect(derived.imputed).toContain("f7_smoking");
  });
});
