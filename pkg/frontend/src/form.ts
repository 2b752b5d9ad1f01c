/** Patient form state: values, per-field dirty tracking, validation against
 * the served schema, and the named what-if scenario list. */

import type { FeatureInfo, FormValue, FormValues, SchemaResponse } from "./types.js";

export interface Violation {
  field: string;
  reason: string;
}

export interface Scenario {
  name: string;
  values: FormValues;
}

export class PatientForm {
  readonly schema: SchemaResponse;
  private values: FormValues = {};
  private dirty = new Set<string>();
  readonly scenarios: Scenario[] = [];

  constructor(schema: SchemaResponse) {
    this.schema = schema;
    for (const f of schema.features) this.values[f.name] = null;
  }

  feature(name: string): FeatureInfo | undefined {
    return this.schema.features.find((f) => f.name === name);
  }

  get(name: string): FormValue {
    return this.values[name] ?? null;
  }

  set(name: string, value: FormValue): void {
    if (!(name in this.values)) throw new Error(`unknown feature ${name}`);
    this.values[name] = value;
    this.dirty.add(name);
  }

  clear(name: string): void {
    this.set(name, null);
  }

  isDirty(name: string): boolean {
    return this.dirty.has(name);
  }

  /** Fields the server will impute as missing (-1): unanswered ones. */
  missingFields(): string[] {
    return this.schema.features.map((f) => f.name).filter((n) => this.values[n] === null);
  }

  snapshot(): FormValues {
    return { ...this.values };
  }

  restore(values: FormValues): void {
    for (const f of this.schema.features) {
      this.values[f.name] = values[f.name] ?? null;
      this.dirty.add(f.name);
    }
  }

  saveScenario(name: string): Scenario {
    const s = { name, values: this.snapshot() };
    const existing = this.scenarios.findIndex((x) => x.name === name);
    if (existing >= 0) this.scenarios[existing] = s;
    else this.scenarios.push(s);
    return s;
  }

  /** Violations against the declared kinds/ranges; an empty list means the
   * state serializes to a valid /predict payload. */
  violations(): Violation[] {
    return validateValues(this.values, this.schema);
  }

  /** The /predict and /explain request body; throws if the state is invalid. */
  toPayload(): { features: Record<string, number> } {
    const bad = this.violations();
    if (bad.length > 0) {
      throw new Error(`invalid form state: ${bad.map((v) => v.field).join(", ")}`);
    }
    return valuesToPayload(this.values);
  }
}

export function validateValues(values: FormValues, schema: SchemaResponse): Violation[] {
  const out: Violation[] = [];
  const known = new Set(schema.features.map((f) => f.name));
  for (const name of Object.keys(values)) {
    if (!known.has(name)) out.push({ field: name, reason: "unknown feature" });
  }
  for (const f of schema.features) {
    const v = values[f.name];
    if (v === null || v === undefined) continue;
    if (typeof v !== "number" || Number.isNaN(v)) {
      out.push({ field: f.name, reason: "value must be numeric" });
      continue;
    }
    if (f.kind === "categorical" && !Number.isInteger(v)) {
      out.push({ field: f.name, reason: "categorical value must be an integer code" });
      continue;
    }
    if (f.range && (v < f.range[0] || v > f.range[1])) {
      out.push({ field: f.name, reason: `out of range [${f.range[0]}, ${f.range[1]}]` });
    }
  }
  return out;
}

export function valuesToPayload(values: FormValues): { features: Record<string, number> } {
  const features: Record<string, number> = {};
  for (const [name, v] of Object.entries(values)) {
    if (v !== null && v !== undefined) features[name] = v;
  }
  return { features };
}
