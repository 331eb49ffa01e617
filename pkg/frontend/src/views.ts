/** Pure view-model builders.
 *
 * Every number these produce is lifted verbatim from a service response
 * field; the only local arithmetic is presentation geometry (bar widths,
 * chart coordinates), never the displayed values themselves.
 */
import type {
  CurveResponse,
  ExplainResponse,
  PredictResponse,
  WhatIfResponse,
} from "./types.js";

export const DECISION_THRESHOLD = 0.5;

export interface ProbabilityView {
  /** Displayed number: the response's 6-digit probability field, as text. */
  text: string;
  fullPrecision: string;
  label: "insolvent" | "solvent";
  /** Gauge geometry in [0, 1]; presentation only. */
  gaugeFraction: number;
}

export function probabilityView(response: PredictResponse): ProbabilityView {
  return {
    text: String(response.probability),
    fullPrecision: response.probability_full,
    label: response.label === 1 ? "insolvent" : "solvent",
    gaugeFraction: Math.min(Math.max(response.probability, 0), 1),
  };
}

export interface NeighborRow {
  id: string;
  insolvent: boolean;
  badge: "insolvent" | "solvent";
  similarityText: string;
  similarityFull: string;
}

export function neighborRows(response: PredictResponse): NeighborRow[] {
  return response.neighbors.map((n) => ({
    id: n.id,
    insolvent: n.label === 1,
    badge: n.label === 1 ? "insolvent" : "solvent",
    similarityText: String(n.similarity),
    similarityFull: n.similarity_full,
  }));
}

export interface ShapleyBar {
  feature: string;
  valueText: string;
  valueFull: string;
  /** Signed value straight from the response (for orientation only). */
  positive: boolean;
  /** Bar length relative to the largest |value|; presentation only. */
  widthFraction: number;
  stderrText: string | null;
}

export interface ShapleyPanel {
  bars: ShapleyBar[];
  residualText: string;
  residualOk: boolean;
  modeText: string;
  baselineText: string;
  predictionText: string;
}

/** Bars in the response's own ranking order (no client-side sorting). */
export function shapleyPanel(response: ExplainResponse, residualTol = 1e-6): ShapleyPanel {
  const shap = response.shapley;
  const maxAbs = shap.ranking.length
    ? Math.max(...shap.values.map((v) => Math.abs(v)))
    : 0;
  const bars = shap.ranking.map((j) => ({
    feature: shap.features[j],
    valueText: String(shap.values[j]),
    valueFull: shap.values_full[j],
    positive: shap.values[j] >= 0,
    widthFraction: maxAbs > 0 ? Math.abs(shap.values[j]) / maxAbs : 0,
    stderrText: shap.stderr ? String(shap.stderr[j]) : null,
  }));
  return {
    bars,
    residualText: String(shap.efficiency_residual),
    residualOk: Math.abs(shap.efficiency_residual) < residualTol,
    modeText: shap.samples === null ? shap.mode : `${shap.mode} (${shap.samples} samples)`,
    baselineText: String(shap.baseline),
    predictionText: String(shap.prediction),
  };
}

export interface TrajectoryPoint {
  step: number;
  /** "start" for step 0, otherwise the replaced feature's name. */
  stepLabel: string;
  probabilityText: string;
  probabilityFull: string;
  /** Chart y in [0, 1]; presentation only. */
  y: number;
  belowThreshold: boolean;
  /** True when this step moves the path across the decision threshold. */
  crossing: boolean;
}

export function trajectoryPoints(response: WhatIfResponse): TrajectoryPoint[] {
  return response.probabilities.map((p, i) => ({
    step: i,
    stepLabel: i === 0 ? "start" : response.feature_names[i - 1],
    probabilityText: String(p),
    probabilityFull: response.probabilities_full[i],
    y: Math.min(Math.max(p, 0), 1),
    belowThreshold: p < DECISION_THRESHOLD,
    crossing:
      i > 0 &&
      p < DECISION_THRESHOLD !== response.probabilities[i - 1] < DECISION_THRESHOLD,
  }));
}

export interface CurvePoint {
  differenceText: string;
  valueText: string;
  x: number;
  y: number;
}

export function curvePoints(response: CurveResponse): CurvePoint[] {
  return response.differences.map((d, i) => ({
    differenceText: String(d),
    valueText: String(response.values[i]),
    x: d,
    y: response.values[i],
  }));
}
