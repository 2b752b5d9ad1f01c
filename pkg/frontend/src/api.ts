/** Service client with latest-write-wins request handling: a newer form state
 * aborts the in-flight assessment so stale responses never render. */

import type { ExplainResponse, PredictResponse, SchemaResponse } from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly field: string | null,
    readonly reason: string,
  ) {
    super(reason);
  }
}

async function post<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
  const payload = await response.json();
  if (!response.ok) {
    const err = payload?.error ?? { field: null, reason: `HTTP ${response.status}` };
    throw new ServiceError(response.status, err.field, err.reason);
  }
  return payload as T;
}

export class Api {
  constructor(readonly base: string = "") {}

  async schema(): Promise<SchemaResponse> {
    const response = await fetch(`${this.base}/schema`);
    if (!response.ok) throw new ServiceError(response.status, null, "schema unavailable");
    return (await response.json()) as SchemaResponse;
  }

  predict(payload: unknown, signal?: AbortSignal): Promise<PredictResponse> {
    return post(`${this.base}/predict`, payload, signal);
  }

  explain(payload: unknown, signal?: AbortSignal): Promise<ExplainResponse> {
    return post(`${this.base}/explain`, payload, signal);
  }
}

/** Serializes assessment requests; superseded requests are aborted. */
export class LatestWins {
  private controller: AbortController | null = null;

  /** Runs `task` with a fresh abort signal, cancelling any previous task. */
  run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    this.controller = new AbortController();
    return task(this.controller.signal);
  }
}
