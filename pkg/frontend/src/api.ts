/** Thin typed client for the consultation service. */

import type {
  AnswersBody,
  CreateSessionBody,
  ErrorEnvelope,
  SessionPayload,
  SessionViewPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error envelope returned by the service, with its HTTP status attached. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Connection-level failure (server unreachable, request aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`request failed: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "UNKNOWN";
  let message = response.statusText;
  try {
    const body = (await response.json()) as ErrorEnvelope;
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionPayload> {
    return this.request<SessionPayload>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  postAnswers(sessionId: string, body: AnswersBody): Promise<SessionPayload> {
    return this.request<SessionPayload>(
      `/sessions/${encodeURIComponent(sessionId)}/answers`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
  }

  getSession(sessionId: string): Promise<SessionViewPayload> {
    return this.request<SessionViewPayload>(
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }
}
