/** Thin typed client for the five service endpoints.
 *
 * Prediction calls are latest-wins: issuing a new predict aborts the
 * in-flight one, so a stale response can never overtake a newer edit.
 */
import type {
  CaseMap,
  CurveResponse,
  ExplainResponse,
  HealthResponse,
  PredictResponse,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function parse<T>(res: Response): Promise<T> {
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : res.statusText;
    throw new ApiError(res.status, detail);
  }
  return body as T;
}

export class ApiClient {
  private predictController: AbortController | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetcher: typeof fetch = fetch,
  ) {}

  private post(path: string, payload: unknown, signal?: AbortSignal): Promise<Response> {
    return this.fetcher(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
      signal,
    });
  }

  async health(): Promise<HealthResponse> {
    return parse(await this.fetcher(this.base + "/health"));
  }

  /** Latest-wins prediction; a superseded call rejects with AbortError. */
  async predict(caseMap: CaseMap): Promise<PredictResponse> {
    this.predictController?.abort();
    const controller = new AbortController();
    this.predictController = controller;
    return parse(await this.post("/predict", { case: caseMap }, controller.signal));
  }

  async explain(
    caseMap: CaseMap,
    mode: "exact" | "mc" = "mc",
    samples?: number,
    seed?: number,
  ): Promise<ExplainResponse> {
    const payload: Record<string, unknown> = { case: caseMap, mode };
    if (samples !== undefined) payload.samples = samples;
    if (seed !== undefined) payload.seed = seed;
    return parse(await this.post("/explain", payload));
  }

  async whatif(
    baseCase: CaseMap,
    targetCase: CaseMap,
    ordering?: string[],
  ): Promise<WhatIfResponse> {
    const payload: Record<string, unknown> = {
      base_case: baseCase,
      target_case: targetCase,
    };
    if (ordering !== undefined) payload.ordering = ordering;
    return parse(await this.post("/whatif", payload));
  }

  async curve(feature: string): Promise<CurveResponse> {
    return parse(await this.fetcher(this.base + "/curves/" + encodeURIComponent(feature)));
  }
}
