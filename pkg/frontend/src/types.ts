/** Response shapes of the prediction service (the HTTP contract, verbatim). */

export interface HealthResponse {
  status: string;
  variant: string;
  k: number;
  n_features: number;
  features: string[];
  feature_codes: string[] | null;
  units: string[] | null;
  scoring_method: string;
  training_metric: string;
  cv_score: number;
  cv_score_full: string;
  reference_cases: number;
  has_prob_weights: boolean;
}

export interface NeighborPayload {
  id: string;
  label: number;
  similarity: number;
  similarity_full: string;
}

export interface PredictResponse {
  label: number;
  probability: number;
  probability_full: string;
  neighbors: NeighborPayload[];
}

export interface ShapleyPayload {
  mode: string;
  samples: number | null;
  seed: number | null;
  features: string[];
  values: number[];
  values_full: string[];
  stderr: number[] | null;
  baseline: number;
  baseline_full: string;
  prediction: number;
  prediction_full: string;
  efficiency_residual: number;
  ranking: number[];
}

export interface ExplainResponse extends PredictResponse {
  relevance_percent: number[];
  shapley: ShapleyPayload;
  note: string;
}

export interface WhatIfResponse {
  ordering: number[];
  feature_names: string[];
  probabilities: number[];
  probabilities_full: string[];
}

export interface CurveResponse {
  feature: string;
  index: number;
  exp_below: number;
  exp_above: number;
  differences: number[];
  values: number[];
  values_full: string[];
}

/** A feature map sent as the "case" body field; null marks a missing slot. */
export type CaseMap = Record<string, number | null>;
