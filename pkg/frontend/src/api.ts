/**
 * Typed client for the troubleshooting session service.
 *
 * All state lives on the server; the client only ever reads views and
 * posts inputs. The fetch implementation is injectable so tests can run
 * against a stub or a live service interchangeably.
 */

export interface PromptView {
  kind: string;
  text: string;
  answers: string[];
  context_note: string | null;
}

export interface Crumb {
  tree: string;
  text: string;
}

export interface HintView {
  label: string;
  score: number | null;
}

export interface FailureModeView {
  id: string;
  name: string;
  area: string;
  operational_impact: string;
  time_cost: string;
  disturbance_risk: string;
  effects: Record<string, string>;
  intervention: string;
  definition: string;
}

export interface FindingView {
  node: string;
  text: string;
  context_note: string | null;
  mode: FailureModeView | null;
}

export interface SessionView {
  session: string;
  status: string;
  stack_depth: number;
  breadcrumb: Crumb[];
  prompt: PromptView | null;
  hints: HintView[] | null;
  finding: FindingView | null;
}

export interface FaultRecordPayload {
  session: string;
  ts: string;
  mode: string;
  area: string;
  duration_s: number;
  notes: string;
}

export type AdvanceInput = { answer: string } | { acknowledge: true };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  private readonly fetchImpl: typeof fetch;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: typeof fetch,
  ) {
    this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(tree: string): Promise<SessionView> {
    return this.request<SessionView>("/sessions", {
      method: "POST",
      body: JSON.stringify({ tree }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}`);
  }

  advance(sessionId: string, input: AdvanceInput): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}/advance`, {
      method: "POST",
      body: JSON.stringify(input),
    });
  }

  abort(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${sessionId}`, {
      method: "DELETE",
    });
  }

  submitFaultRecord(
    record: FaultRecordPayload,
  ): Promise<{ added: boolean; records: number }> {
    return this.request("/faultlog", {
      method: "POST",
      body: JSON.stringify(record),
    });
  }
}
