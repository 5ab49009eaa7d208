// Thin fetch client for the debugging-assistant service. All state lives
// server-side; the UI never mutates anything except through these calls.

import type {
  ExecuteResponse,
  ModelStatus,
  PredictResponse,
  ScenarioSummary,
  SessionBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    const code = body && typeof body.code === "string" ? body.code : "http_error";
    const message = body && typeof body.message === "string" ? body.message : resp.statusText;
    throw new ApiError(resp.status, code, message);
  }
  return body as T;
}

export class Client {
  constructor(public base: string = "") {}

  listDatasets(): Promise<{ datasets: string[] }> {
    return request(this.base, "/datasets");
  }

  listScenarios(datasetId: string, split?: string): Promise<ScenarioSummary[]> {
    const qs = split ? `?split=${encodeURIComponent(split)}` : "";
    return request(this.base, `/datasets/${datasetId}/scenarios${qs}`);
  }

  modelStatus(modelId: string): Promise<ModelStatus> {
    return request(this.base, `/models/${modelId}`);
  }

  predict(body: {
    model_id: string;
    dataset_id: string;
    scenario_id: string;
    report_text?: string;
    choices?: Record<string, boolean>;
    k?: number;
  }): Promise<PredictResponse> {
    return request(this.base, "/predict", { method: "POST", body: JSON.stringify({ k: 5, ...body }) });
  }

  execute(body: { dataset_id: string; scenario_id: string; query: string }): Promise<ExecuteResponse> {
    return request(this.base, "/execute", { method: "POST", body: JSON.stringify(body) });
  }

  createSession(body: { dataset_id: string; scenario_id: string; report_text?: string }): Promise<SessionBody> {
    return request(this.base, "/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  getSession(sessionId: string): Promise<SessionBody> {
    return request(this.base, `/sessions/${sessionId}`);
  }

  patchSession(
    sessionId: string,
    patch: {
      predictions?: PredictResponse["queries"];
      executed_query?: string;
      verdict_index?: number;
    },
  ): Promise<SessionBody> {
    return request(this.base, `/sessions/${sessionId}`, { method: "PATCH", body: JSON.stringify(patch) });
  }
}
