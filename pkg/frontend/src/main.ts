/** Wires the form to the service: build controls from /schema, reassess on
 * every change (latest-write-wins), save and compare scenarios. */

import { Api, LatestWins, ServiceError } from "./api.js";
import { assess, type Assessment } from "./assess.js";
import { compareScenarios } from "./compare.js";
import { PatientForm } from "./form.js";
import {
  applyAssessment,
  applyComparison,
  hideStaleBanner,
  showStaleBanner,
} from "./render.js";
import type { FeatureInfo, FormValues, SchemaResponse } from "./types.js";

const api = new Api("");
const queue = new LatestWins();

function controlFor(f: FeatureInfo, form: PatientForm, onChange: () => void): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const name = document.createElement("span");
  name.textContent = f.unit ? `${f.name} (${f.unit})` : f.name;
  wrap.appendChild(name);

  if (f.kind === "categorical" && (f.category_count ?? 2) <= 2) {
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () => {
      form.set(f.name, box.checked ? 1 : 0);
      onChange();
    });
    wrap.appendChild(box);
  } else if (f.kind === "categorical") {
    const select = document.createElement("select");
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "(unanswered)";
    select.appendChild(blank);
    for (let code = 0; code < (f.category_count ?? 3); code++) {
      const opt = document.createElement("option");
      opt.value = String(code);
      opt.textContent = `code ${code}`;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      form.set(f.name, select.value === "" ? null : Number(select.value));
      onChange();
    });
    wrap.appendChild(select);
  } else {
    const slider = document.createElement("input");
    slider.type = "range";
    const [lo, hi] = f.range ?? [0, 100];
    slider.min = String(lo);
    slider.max = String(hi);
    slider.step = "0.1";
    slider.value = String((lo + hi) / 2);
    const num = document.createElement("input");
    num.type = "number";
    num.min = slider.min;
    num.max = slider.max;
    num.step = slider.step;
    const push = (raw: string) => {
      if (raw === "") form.clear(f.name);
      else form.set(f.name, Number(raw));
      onChange();
    };
    slider.addEventListener("input", () => {
      num.value = slider.value;
      push(slider.value);
    });
    num.addEventListener("change", () => {
      slider.value = num.value;
      push(num.value);
    });
    wrap.append(slider, num);
  }
  return wrap;
}

async function boot(): Promise<void> {
  let schema: SchemaResponse;
  try {
    schema = await api.schema();
  } catch {
    showStaleBanner(document, "Service unreachable: could not load /schema.");
    return;
  }
  const form = new PatientForm(schema);
  const fields = document.getElementById("fields")!;

  let lastGood: Assessment | null = null;
  const snapshots = new Map<string, { values: FormValues; assessment: Assessment }>();

  const reassess = () => {
    const violations = form.violations();
    const violEl = document.getElementById("violations")!;
    violEl.textContent = violations
      .map((v) => `${v.field}: ${v.reason}`)
      .join("; ");
    if (violations.length > 0) return;
    const values = form.snapshot();
    const payload = form.toPayload();
    queue
      .run((signal) => assess(api, values, schema, payload, signal))
      .then((a) => {
        lastGood = a;
        hideStaleBanner(document);
        applyAssessment(document, a);
      })
      .catch((err: unknown) => {
        if (err instanceof DOMException && err.name === "AbortError") return;
        const reason = err instanceof ServiceError ? err.reason : "network failure";
        showStaleBanner(
          document,
          `Assessment failed (${reason}); the numbers below are stale.`,
        );
      });
  };

  for (const f of schema.features) {
    fields.appendChild(controlFor(f, form, reassess));
  }

  document.getElementById("save-scenario")!.addEventListener("click", () => {
    const nameInput = document.getElementById("scenario-name") as HTMLInputElement;
    const name = nameInput.value.trim() || `scenario ${form.scenarios.length + 1}`;
    if (!lastGood) return;
    form.saveScenario(name);
    snapshots.set(name, { values: form.snapshot(), assessment: lastGood });
    const list = document.getElementById("scenario-list")!;
    list.textContent = [...snapshots.keys()].join(", ");
  });

  document.getElementById("compare-scenarios")!.addEventListener("click", () => {
    const pick = (id: string) =>
      (document.getElementById(id) as HTMLInputElement).value.trim();
    const a = snapshots.get(pick("compare-a"));
    const b = snapshots.get(pick("compare-b"));
    if (!a || !b) return;
    applyComparison(
      document,
      compareScenarios(a.values, a.assessment, b.values, b.assessment),
    );
  });

  reassess();
}

boot();
