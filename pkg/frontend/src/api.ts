/** Typed HTTP client for the sprint service.
 *
 * Every method maps one-to-one onto a service route; bodies are passed
 * through `JSON.stringify` untouched so what a caller builds is exactly what
 * goes on the wire. Errors surface as ApiError with the machine-readable
 * reason code from the service's error envelope.
 */

import type {
  PrimeBody,
  PrimeResult,
  PruneBody,
  RunAccepted,
  RunBody,
  ScatterPayload,
  SpaceJson,
  SprintBody,
  SprintSummary,
  ThreadBody,
  ThreadJson,
  TrialPage,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
    readonly detailMessage: string,
  ) {
    super(`${status} ${reason}: ${detailMessage}`);
    this.name = "ApiError";
  }
}

async function toApiError(res: Response): Promise<ApiError> {
  let reason = "http-error";
  let message = res.statusText || `HTTP ${res.status}`;
  try {
    const data: unknown = await res.json();
    const detail = (data as { detail?: unknown }).detail;
    if (detail && typeof detail === "object") {
      const d = detail as Partial<{ reason: string; message: string }>;
      if (typeof d.reason === "string") reason = d.reason;
      if (typeof d.message === "string") message = d.message;
    } else if (typeof detail === "string") {
      message = detail;
    }
  } catch {
    // non-JSON body: keep the status-line fallback
  }
  return new ApiError(res.status, reason, message);
}

export class SprintOptClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) throw await toApiError(res);
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  listThreads(): Promise<ThreadJson[]> {
    return this.request("GET", "/threads");
  }

  createThread(body: ThreadBody): Promise<ThreadJson> {
    return this.request("POST", "/threads", body);
  }

  thread(threadId: string): Promise<ThreadJson> {
    return this.request("GET", `/threads/${encodeURIComponent(threadId)}`);
  }

  threadSprints(threadId: string): Promise<SprintSummary[]> {
    return this.request("GET", `/threads/${encodeURIComponent(threadId)}/sprints`);
  }

  threadSpace(threadId: string, version?: number): Promise<SpaceJson> {
    const query = version === undefined ? "" : `?version=${version}`;
    return this.request("GET", `/threads/${encodeURIComponent(threadId)}/space${query}`);
  }

  createSprint(body: SprintBody): Promise<SprintSummary> {
    return this.request("POST", "/sprints", body);
  }

  sprint(sprintId: string): Promise<SprintSummary> {
    return this.request("GET", `/sprints/${encodeURIComponent(sprintId)}`);
  }

  trials(sprintId: string, opts: { limit?: number; offset?: number } = {}): Promise<TrialPage> {
    const params = new URLSearchParams();
    if (opts.limit !== undefined) params.set("limit", String(opts.limit));
    if (opts.offset !== undefined) params.set("offset", String(opts.offset));
    const query = params.size ? `?${params.toString()}` : "";
    return this.request("GET", `/sprints/${encodeURIComponent(sprintId)}/trials${query}`);
  }

  sprintSpace(sprintId: string): Promise<SpaceJson> {
    return this.request("GET", `/sprints/${encodeURIComponent(sprintId)}/space`);
  }

  scatter(sprintId: string, dimName: string, k?: number): Promise<ScatterPayload> {
    const query = k === undefined ? "" : `?k=${k}`;
    return this.request(
      "GET",
      `/sprints/${encodeURIComponent(sprintId)}/dimensions/${encodeURIComponent(dimName)}/scatter${query}`,
    );
  }

  prime(sprintId: string, body: PrimeBody): Promise<PrimeResult> {
    return this.request("POST", `/sprints/${encodeURIComponent(sprintId)}/prime`, body);
  }

  prune(sprintId: string, body: PruneBody): Promise<SpaceJson> {
    return this.request("POST", `/sprints/${encodeURIComponent(sprintId)}/prune`, body);
  }

  run(sprintId: string, body?: RunBody): Promise<SprintSummary | RunAccepted> {
    return this.request("POST", `/sprints/${encodeURIComponent(sprintId)}/run`, body ?? {});
  }
}
