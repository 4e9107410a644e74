// Typed client for the session service. Every method maps to exactly one
// endpoint; the console never talks to anything else.

import type {
  InstructionResult,
  MetricsSummary,
  SessionDescribe,
  TranscriptEntryPlain,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string" && body.detail) return body.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

export interface CreateSessionRequest {
  backend?: string;
  seed?: number;
}

export class StudioApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  private post(body: unknown): RequestInit {
    return {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    };
  }

  createSession(request: CreateSessionRequest = {}): Promise<SessionDescribe> {
    return this.request("/sessions", this.post(request));
  }

  describeSession(id: string): Promise<SessionDescribe> {
    return this.request(`/sessions/${id}`);
  }

  submitInstruction(id: string, text: string): Promise<InstructionResult> {
    return this.request(`/sessions/${id}/instructions`, this.post({ text }));
  }

  undoInstruction(id: string): Promise<InstructionResult> {
    return this.request(`/sessions/${id}/undo`, { method: "POST" });
  }

  sceneDocument(id: string): Promise<unknown> {
    return this.request(`/sessions/${id}/scene`);
  }

  async sceneScript(id: string): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/sessions/${id}/script`);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.text();
  }

  transcript(id: string): Promise<TranscriptEntryPlain[]> {
    return this.request(`/sessions/${id}/transcript`);
  }

  metrics(id: string): Promise<MetricsSummary> {
    return this.request(`/sessions/${id}/metrics`);
  }
}
