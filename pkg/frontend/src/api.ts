// Typed client for the session service. The UI talks to the server through
// this module only and never computes pipeline results itself.

export interface TraceScore {
  insert_before: number;
  probability: number;
}

export interface TraceStep {
  insert_before: number;
  sentence: string;
  scores: TraceScore[];
}

export interface Scores {
  lexical_overlap: number;
  cosine_similarity: number;
  syntax_similarity: number | null;
  distinct_ngrams: number;
}

export interface Attempt {
  index: number;
  phrase_list: string[];
  phrase_list_source: "generated" | "user-edited";
  warnings: string[];
  intermediates: Record<string, unknown> | null;
  stop: string | null;
  sentences: string[];
  trace: TraceStep[];
  final_story: string[] | null;
  scores: Scores | null;
}

export interface SessionConfig {
  n: number;
  gamma: number;
  seed: number;
  markers: Record<string, string>;
  backends: Record<string, string>;
}

export interface Session {
  id: string;
  start: string;
  scheme: string;
  config: SessionConfig;
  created_at: number;
  updated_at: number;
  attempts: Attempt[];
}

export interface SessionSummary {
  id: string;
  start: string;
  scheme: string;
  attempts: number;
  created_at: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: unknown = {},
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(response.status, body.code ?? "error", body.message ?? response.statusText, body.detail);
  } catch {
    return new ApiError(response.status, "error", response.statusText);
  }
}

export class SessionApi {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  createSession(start: string, scheme = "lm", n?: number): Promise<Session> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(n === undefined ? { start, scheme } : { start, scheme, n }),
    });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request("/sessions");
  }

  getSession(id: string): Promise<Session> {
    return this.request(`/sessions/${id}`);
  }

  editPhraseList(id: string, tokens: string[]): Promise<Attempt> {
    return this.request(`/sessions/${id}/phrase-list`, {
      method: "POST",
      body: JSON.stringify({ tokens }),
    });
  }

  generateStop(id: string, attempt: number): Promise<Attempt> {
    return this.request(`/sessions/${id}/attempts/${attempt}/stop`, { method: "POST" });
  }

  infillStep(id: string, attempt: number): Promise<{ step: TraceStep; sentences: string[] }> {
    return this.request(`/sessions/${id}/attempts/${attempt}/infill-step`, { method: "POST" });
  }

  infillComplete(id: string, attempt: number): Promise<Attempt> {
    return this.request(`/sessions/${id}/attempts/${attempt}/infill-complete`, { method: "POST" });
  }

  score(id: string, attempt: number): Promise<Scores> {
    return this.request(`/sessions/${id}/attempts/${attempt}/score`, { method: "POST" });
  }
}
