/** Pure view-model builders plus thin DOM appliers. The numbers shown are
 * always the latest server response; the only client-side math is display
 * rounding and the bar scaling below. */

import type { Assessment } from "./assess.js";
import type { ScenarioComparison } from "./compare.js";

export interface Bar {
  feature: string;
  value: number;
  /** signed width in [-1, 1] relative to the largest |contribution| */
  width: number;
  positive: boolean;
}

export function contributionBars(contributions: Record<string, number>, limit = 12): Bar[] {
  const entries = Object.entries(contributions)
    .sort((a, b) => Math.abs(b[1]) - Math.abs(a[1]))
    .slice(0, limit);
  const top = Math.max(1e-12, ...entries.map(([, v]) => Math.abs(v)));
  return entries.map(([feature, value]) => ({
    feature,
    value,
    width: value / top,
    positive: value >= 0,
  }));
}

export function formatProbability(p: number): string {
  return `${(100 * p).toFixed(1)}%`;
}

export function labelClass(label: string): string {
  return { Low: "label-low", Medium: "label-medium", High: "label-high" }[label] ?? "";
}

export function applyAssessment(root: Document, a: Assessment): void {
  const labelEl = root.getElementById("risk-label")!;
  labelEl.textContent = a.predict.risk_label;
  labelEl.className = `risk-label ${labelClass(a.predict.risk_label)}`;
  root.getElementById("probability")!.textContent = formatProbability(a.predict.probability);
  const gauge = root.getElementById("gauge-fill") as HTMLElement;
  gauge.style.width = `${Math.round(100 * a.predict.probability)}%`;

  const banner = root.getElementById("parity-banner") as HTMLElement;
  banner.hidden = a.ruleParity;
  if (!a.ruleParity) {
    banner.textContent =
      `Rule mismatch: client computed ${a.clientLabel}, server says ${a.predict.risk_label}. ` +
      "The server result is shown.";
  }

  const missing = root.getElementById("missing-badges")!;
  missing.textContent = "";
  for (const name of a.predict.missing_imputed) {
    const badge = root.createElement("span");
    badge.className = "badge";
    badge.textContent = `${name}: imputed as missing`;
    missing.appendChild(badge);
  }

  const chart = root.getElementById("contributions")!;
  chart.textContent = "";
  for (const bar of contributionBars(a.explain.contributions)) {
    const row = root.createElement("div");
    row.className = "bar-row";
    const name = root.createElement("span");
    name.className = "bar-name";
    name.textContent = bar.feature;
    const track = root.createElement("div");
    track.className = "bar-track";
    const fill = root.createElement("div");
    fill.className = `bar-fill ${bar.positive ? "bar-pos" : "bar-neg"}`;
    fill.style.width = `${Math.abs(bar.width) * 50}%`;
    fill.style.marginLeft = bar.positive ? "50%" : `${50 - Math.abs(bar.width) * 50}%`;
    track.appendChild(fill);
    const val = root.createElement("span");
    val.className = "bar-value";
    val.textContent = bar.value.toFixed(4);
    row.append(name, track, val);
    chart.appendChild(row);
  }
}

export function applyComparison(root: Document, c: ScenarioComparison): void {
  const el = root.getElementById("comparison")!;
  el.textContent = "";
  const head = root.createElement("div");
  head.className = "compare-head";
  const sign = c.probabilityDelta >= 0 ? "+" : "";
  head.textContent =
    `${c.labelA} ${formatProbability(c.probabilityA)} -> ` +
    `${c.labelB} ${formatProbability(c.probabilityB)} ` +
    `(delta ${sign}${(100 * c.probabilityDelta).toFixed(1)} pp)`;
  el.appendChild(head);
  for (const d of c.deltas.slice(0, 10)) {
    if (!d.changed && Math.abs(d.contributionDelta) < 1e-9) continue;
    const row = root.createElement("div");
    row.className = d.reversible && d.changed ? "delta-row reversible" : "delta-row";
    row.textContent =
      `${d.feature}: contribution ${d.contributionA.toFixed(4)} -> ` +
      `${d.contributionB.toFixed(4)} (delta ${d.contributionDelta >= 0 ? "+" : ""}` +
      `${d.contributionDelta.toFixed(4)})${d.reversible && d.changed ? "  [reversible]" : ""}`;
    el.appendChild(row);
  }
}

export function showStaleBanner(root: Document, message: string): void {
  const banner = root.getElementById("stale-banner") as HTMLElement;
  banner.hidden = false;
  banner.textContent = message;
}

export function hideStaleBanner(root: Document): void {
  (root.getElementById("stale-banner") as HTMLElement).hidden = true;
}
