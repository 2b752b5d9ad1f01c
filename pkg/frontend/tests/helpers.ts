import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { ExplainResponse, PredictResponse, SchemaResponse } from "../src/types.js";

const fixtureDir = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(fixtureDir, name), "utf-8")) as T;
}

export interface LabelFixtureRow {
  factors: Record<string, boolean>;
  features: Record<string, number>;
  server_label: "Low" | "Medium" | "High";
}

export interface PatientFixture {
  id: number;
  features: Record<string, number>;
  predict: PredictResponse;
  explain: ExplainResponse;
}

export interface ScenarioRecord {
  features: Record<string, number>;
  predict: PredictResponse;
  explain: ExplainResponse;
}

export interface ScenarioPairFixture {
  smoker: ScenarioRecord;
  non_smoker: ScenarioRecord;
  lower_systolic: ScenarioRecord;
}

export const fullSchema = (): SchemaResponse => loadFixture<SchemaResponse>("full_schema.json");
export const modelSchema = (): SchemaResponse => loadFixture<SchemaResponse>("schema.json");
