import type { CreateResponse, SessionResource, StepResponse, UserInput } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

/** Thin typed client over the session service's JSON API. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await res.json();
    if (!res.ok || (data && typeof data === "object" && "error" in data)) {
      const message =
        data && typeof data === "object" && "error" in data
          ? String((data as { error: unknown }).error)
          : `service returned ${res.status}`;
      throw new ApiError(message, res.status);
    }
    return data as T;
  }

  createSession(query: string, policy: string, qid?: string): Promise<CreateResponse> {
    const body: Record<string, string> = { query, policy };
    if (qid !== undefined) body.qid = qid;
    return this.call("POST", "/sessions", body);
  }

  step(sessionId: string, input: UserInput): Promise<StepResponse> {
    return this.call("POST", `/sessions/${sessionId}/step`, input);
  }

  getSession(sessionId: string): Promise<SessionResource> {
    return this.call("GET", `/sessions/${sessionId}`);
  }

  listPolicies(): Promise<{ policies: string[] }> {
    return this.call("GET", "/policies");
  }

  getDoc(docId: string): Promise<{ id: string; text: string }> {
    return this.call("GET", `/docs/${docId}`);
  }
}
