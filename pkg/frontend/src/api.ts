// Typed client for the scriptchat HTTP API. The UI keeps no conversation
// state of its own: after every action it refetches the transcript and
// re-renders, so the view is always a pure projection of the service.

import type {
  CreateSessionResponse,
  PromptDebugResponse,
  TranscriptResponse,
  TurnBody,
  TurnOutcome,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public retryable: boolean = false,
  ) {
    super(message);
  }
}

/** Build the POST /turns body. The language attribute is attached to a
 * selection only when tagging is enabled (off by default: selections are
 * untagged on the wire). */
export function buildTurnBody(
  text: string,
  selection: string | null,
  language: string | null,
  tagLanguage: boolean,
): TurnBody {
  const body: TurnBody = {};
  const trimmedText = text.length > 0 ? text : null;
  if (trimmedText !== null) {
    body.text = trimmedText;
  }
  if (selection !== null && selection.length > 0) {
    body.code_selection = tagLanguage && language ? { body: selection, language } : { body: selection };
  }
  return body;
}

export function canSend(text: string, selection: string | null, inFlight: boolean): boolean {
  if (inFlight) return false;
  return text.trim().length > 0 || (selection !== null && selection.length > 0);
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ScriptchatApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = typeof payload?.detail === "string" ? payload.detail : response.statusText;
      throw new ApiError(detail, response.status, payload?.retryable === true);
    }
    return payload as T;
  }

  createSession(persona: string): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", { persona });
  }

  postTurn(sessionId: string, body: TurnBody): Promise<TurnOutcome> {
    return this.request("POST", `/sessions/${sessionId}/turns`, body);
  }

  retry(sessionId: string): Promise<TurnOutcome> {
    return this.request("POST", `/sessions/${sessionId}/retry`, {});
  }

  reset(sessionId: string): Promise<{ ok: boolean }> {
    return this.request("POST", `/sessions/${sessionId}/reset`);
  }

  transcript(sessionId: string): Promise<TranscriptResponse> {
    return this.request("GET", `/sessions/${sessionId}/transcript`);
  }

  promptDebug(sessionId: string): Promise<PromptDebugResponse> {
    return this.request("GET", `/sessions/${sessionId}/prompt`);
  }
}
