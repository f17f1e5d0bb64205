/** Thin JSON client for the map service HTTP endpoints. */

import type {
  AnchorResponse,
  AnchorSpec,
  CallersResponse,
  MapPayload,
  SearchResponse,
  SessionInfo,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface MapApi {
  getMap(): Promise<MapPayload>;
  search(query: string): Promise<SearchResponse>;
  getCallers(path: string): Promise<CallersResponse>;
  getFile(path: string): Promise<string>;
  openSession(user: string): Promise<SessionInfo>;
  openFile(sessionId: string, path: string): Promise<void>;
  closeFile(sessionId: string, path: string): Promise<void>;
  postAnchors(spec: AnchorSpec): Promise<AnchorResponse>;
}

async function raiseForStatus(response: Response): Promise<Response> {
  if (response.ok) {
    return response;
  }
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body === "object" && body !== null) {
      detail = String(
        (body as Record<string, unknown>).detail ??
          (body as Record<string, unknown>).error ??
          detail,
      );
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export function createApi(
  baseUrl: string,
  fetchImpl: FetchLike = fetch,
): MapApi {
  const base = baseUrl.replace(/\/+$/, "");

  async function getJson<T>(path: string): Promise<T> {
    const response = await raiseForStatus(await fetchImpl(base + path));
    return (await response.json()) as T;
  }

  async function postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await raiseForStatus(
      await fetchImpl(base + path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
    return (await response.json()) as T;
  }

  return {
    getMap: () => getJson<MapPayload>("/map"),
    search: (query) =>
      getJson<SearchResponse>("/search?q=" + encodeURIComponent(query)),
    getCallers: (path) =>
      getJson<CallersResponse>("/callers?path=" + encodeURIComponent(path)),
    getFile: async (path) => {
      const response = await raiseForStatus(
        await fetchImpl(base + "/file?path=" + encodeURIComponent(path)),
      );
      return response.text();
    },
    openSession: (user) => postJson<SessionInfo>("/session", { user }),
    openFile: async (sessionId, path) => {
      await postJson(`/session/${sessionId}/open`, { path });
    },
    closeFile: async (sessionId, path) => {
      await postJson(`/session/${sessionId}/close`, { path });
    },
    postAnchors: (spec) => postJson<AnchorResponse>("/anchors", spec),
  };
}
