/** Console state: the loaded model, the base case, staged edits, and the
 * last acknowledged server responses.
 *
 * The store never computes numbers itself; the displayed probability is
 * always the one carried by the most recently acknowledged prediction
 * response (latest-wins on request ids), and edits never touch the base
 * case map.
 */
import type {
  CaseMap,
  ExplainResponse,
  HealthResponse,
  PredictResponse,
  WhatIfResponse,
} from "./types.js";

export class ConsoleStore {
  private health_: HealthResponse | null = null;
  private baseCase_: CaseMap = {};
  private edits_ = new Map<string, number>();
  private basePrediction_: PredictResponse | null = null;
  private prediction_: PredictResponse | null = null;
  private explanation_: ExplainResponse | null = null;
  private trajectory_: WhatIfResponse | null = null;
  private nextRequest = 0;
  private acknowledged = -1;

  loadModel(health: HealthResponse): void {
    this.health_ = health;
  }

  get health(): HealthResponse | null {
    return this.health_;
  }

  get pending(): boolean {
    return this.nextRequest - 1 > this.acknowledged;
  }

  setBaseCase(caseMap: CaseMap): void {
    this.baseCase_ = { ...caseMap };
    this.edits_.clear();
    this.basePrediction_ = null;
    this.prediction_ = null;
    this.explanation_ = null;
    this.trajectory_ = null;
  }

  get baseCase(): CaseMap {
    return { ...this.baseCase_ };
  }

  private assertKnownFeature(feature: string): void {
    if (!this.health_) throw new Error("no model loaded");
    const names = this.health_.features;
    const codes = this.health_.feature_codes ?? [];
    if (!names.includes(feature) && !codes.includes(feature)) {
      throw new Error(`unknown feature: ${feature}`);
    }
  }

  /** Stage one feature override. Non-finite input is rejected. */
  stageEdit(feature: string, value: number): void {
    this.assertKnownFeature(feature);
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new Error(`non-numeric value for ${feature}`);
    }
    this.edits_.set(feature, value);
  }

  revertEdit(feature: string): void {
    this.edits_.delete(feature);
  }

  revertAll(): void {
    this.edits_.clear();
  }

  get stagedEdits(): ReadonlyMap<string, number> {
    return this.edits_;
  }

  /** The base case with staged edits applied (base map is not mutated). */
  effectiveCase(): CaseMap {
    const merged: CaseMap = { ...this.baseCase_ };
    for (const [feature, value] of this.edits_) merged[feature] = value;
    return merged;
  }

  /** Reserve a request id for the next prediction round-trip. */
  beginRequest(): number {
    return this.nextRequest++;
  }

  /** Accept a prediction response unless a newer one was already accepted. */
  acknowledgePrediction(requestId: number, response: PredictResponse): boolean {
    if (requestId <= this.acknowledged) return false;
    this.acknowledged = requestId;
    this.prediction_ = response;
    if (this.edits_.size === 0) this.basePrediction_ = response;
    return true;
  }

  /** Remember the base-case prediction explicitly (first load). */
  acknowledgeBasePrediction(requestId: number, response: PredictResponse): boolean {
    const accepted = this.acknowledgePrediction(requestId, response);
    if (accepted) this.basePrediction_ = response;
    return accepted;
  }

  setExplanation(response: ExplainResponse): void {
    this.explanation_ = response;
  }

  setTrajectory(response: WhatIfResponse): void {
    this.trajectory_ = response;
  }

  get prediction(): PredictResponse | null {
    return this.prediction_;
  }

  get basePrediction(): PredictResponse | null {
    return this.basePrediction_;
  }

  get explanation(): ExplainResponse | null {
    return this.explanation_;
  }

  get trajectory(): WhatIfResponse | null {
    return this.trajectory_;
  }

  /** The probability currently on display: last acknowledged response only. */
  displayedProbability(): number | null {
    return this.prediction_ ? this.prediction_.probability : null;
  }

  displayedProbabilityFull(): string | null {
    return this.prediction_ ? this.prediction_.probability_full : null;
  }
}
