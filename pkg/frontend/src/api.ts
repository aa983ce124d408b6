// Thin typed client for the session service. The UI derives nothing
// itself; every number it shows comes straight out of these responses.

import type {
  AnalysisReport,
  BreakpointCut,
  EdgeList,
  EventInfo,
  EventsPage,
  ExploreResult,
  Finding,
  HeatData,
  ManipulateResult,
  MappingData,
  MsgIdJson,
  RaceReport,
  SessionInfo,
} from "./model";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

// Structural fetch so tests can substitute a transport; the browser's
// fetch satisfies it.
export interface FetchLike {
  (input: string, init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  }): Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async json<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    const body = (await res.json()) as { error?: string };
    if (!res.ok) {
      throw new ApiError(res.status, (body && body.error) || `HTTP ${res.status}`);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  private withSession(path: string, session?: string): string {
    if (!session) return path;
    return path + (path.includes("?") ? "&" : "?") + "session=" + session;
  }

  session(id?: string): Promise<SessionInfo> {
    return this.json(id ? `/api/session?id=${id}` : "/api/session");
  }

  events(session?: string, limit = 10000): Promise<EventsPage> {
    return this.json(this.withSession(`/api/events?limit=${limit}`, session));
  }

  edges(session?: string): Promise<EdgeList> {
    return this.json(this.withSession("/api/graph/edges", session));
  }

  findings(session?: string): Promise<{ findings: Finding[] }> {
    return this.json(this.withSession("/api/findings", session));
  }

  report(session?: string): Promise<AnalysisReport> {
    return this.json(this.withSession("/api/report", session));
  }

  races(event: string, mode: "hb" | "exact", session?: string): Promise<RaceReport> {
    return this.json(this.withSession(`/api/races?event=${event}&mode=${mode}`, session));
  }

  eventInfo(event: string, session?: string): Promise<EventInfo> {
    return this.json(this.withSession(`/api/event?event=${event}`, session));
  }

  breakpoint(event: string, session?: string): Promise<BreakpointCut> {
    return this.post(this.withSession("/api/breakpoint", session), { event });
  }

  manipulate(
    event: string,
    force: MsgIdJson,
    suffixSeed: number,
    session?: string,
  ): Promise<ManipulateResult> {
    return this.post(this.withSession("/api/manipulate", session), {
      event,
      force,
      suffix_seed: suffixSeed,
    });
  }

  explore(limits: Record<string, number>, session?: string): Promise<ExploreResult> {
    return this.post(this.withSession("/api/explore", session), { limits });
  }

  arrayHeat(collection: string, session?: string): Promise<HeatData> {
    return this.json(this.withSession(`/api/array/${collection}/heat`, session));
  }

  arrayMapping(collection: string, session?: string): Promise<MappingData> {
    return this.json(this.withSession(`/api/array/${collection}/mapping`, session));
  }
}
