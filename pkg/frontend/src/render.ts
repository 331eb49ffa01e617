/** DOM bindings: translate view models into elements. No numeric logic here. */
import type { HealthResponse } from "./types.js";
import type {
  CurvePoint,
  NeighborRow,
  ProbabilityView,
  ShapleyPanel,
  TrajectoryPoint,
} from "./views.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderModelInfo(target: HTMLElement, health: HealthResponse): void {
  target.replaceChildren(
    el("span", "tag", health.variant.toUpperCase()),
    el("span", undefined, ` K=${health.k} · ${health.n_features} features · `),
    el("span", undefined, `${health.reference_cases} reference cases · `),
    el("span", undefined,
       `CV ${health.training_metric} ${health.cv_score} (${health.scoring_method})`),
  );
}

export function renderProbability(target: HTMLElement, view: ProbabilityView | null): void {
  target.replaceChildren();
  if (!view) {
    target.append(el("p", "pending", "awaiting prediction..."));
    return;
  }
  const label = el("div", `verdict ${view.label}`, view.label);
  const value = el("div", "prob-value", view.text);
  value.title = view.fullPrecision;
  const gauge = el("div", "gauge");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${view.gaugeFraction * 100}%`;
  gauge.append(fill);
  const mark = el("div", "gauge-threshold");
  gauge.append(mark);
  target.append(label, value, gauge);
}

export function renderNeighbors(target: HTMLElement, rows: NeighborRow[]): void {
  const table = el("table", "neighbors");
  const head = el("tr");
  for (const h of ["reference", "status", "similarity"]) head.append(el("th", undefined, h));
  table.append(head);
  for (const row of rows) {
    const tr = el("tr");
    tr.append(el("td", undefined, row.id));
    tr.append(el("td", `badge ${row.badge}`, row.badge));
    const sim = el("td", undefined, row.similarityText);
    sim.title = row.similarityFull;
    tr.append(sim);
    table.append(tr);
  }
  target.replaceChildren(table);
}

export function renderShapley(target: HTMLElement, panel: ShapleyPanel | null): void {
  target.replaceChildren();
  if (!panel) {
    target.append(el("p", "pending", "no explanation requested yet"));
    return;
  }
  const badge = el(
    "span",
    `residual ${panel.residualOk ? "ok" : "bad"}`,
    `residual ${panel.residualText}`,
  );
  target.append(el("div", "panel-meta", panel.modeText + " "), badge);
  for (const bar of panel.bars) {
    const row = el("div", "bar-row");
    row.append(el("span", "bar-label", bar.feature));
    const track = el("div", "bar-track");
    const fill = el("div", `bar-fill ${bar.positive ? "pos" : "neg"}`);
    fill.style.width = `${bar.widthFraction * 100}%`;
    track.append(fill);
    row.append(track);
    const value = el("span", "bar-value", bar.valueText);
    value.title = bar.valueFull + (bar.stderrText ? ` ± ${bar.stderrText}` : "");
    row.append(value);
    target.append(row);
  }
}

export function renderTrajectory(target: HTMLElement, points: TrajectoryPoint[] | null): void {
  target.replaceChildren();
  if (!points || points.length === 0) {
    target.append(el("p", "pending", "no what-if trajectory yet"));
    return;
  }
  const chart = el("div", "traj-chart");
  const threshold = el("div", "traj-threshold");
  chart.append(threshold);
  const span = Math.max(points.length - 1, 1);
  for (const p of points) {
    const dot = el("div", `traj-dot${p.crossing ? " crossing" : ""}`);
    dot.style.left = `${(p.step / span) * 100}%`;
    dot.style.bottom = `${p.y * 100}%`;
    dot.title = `${p.stepLabel}: ${p.probabilityText}`;
    chart.append(dot);
  }
  target.append(chart);
  const list = el("ol", "traj-steps");
  for (const p of points) {
    const item = el(
      "li",
      p.belowThreshold ? "solvent-side" : "insolvent-side",
      `${p.stepLabel}: ${p.probabilityText}`,
    );
    item.title = p.probabilityFull;
    if (p.crossing) item.classList.add("crossing");
    list.append(item);
  }
  target.append(list);
}

export function renderCurve(target: HTMLElement, points: CurvePoint[] | null): void {
  target.replaceChildren();
  if (!points) return;
  const chart = el("div", "curve-chart");
  for (const p of points) {
    const dot = el("div", "curve-dot");
    dot.style.left = `${((p.x + 1) / 2) * 100}%`;
    dot.style.bottom = `${p.y * 100}%`;
    dot.title = `${p.differenceText} -> ${p.valueText}`;
    chart.append(dot);
  }
  target.append(chart);
}

export function renderEditorStatus(target: HTMLElement, message: string, bad = false): void {
  target.textContent = message;
  target.className = bad ? "editor-status bad" : "editor-status";
}
