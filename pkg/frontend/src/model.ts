// Shapes of the JSON the session service returns. Field names mirror the
// wire format exactly; the UI must display these values verbatim.

export interface EventRefJson {
  process: number;
  event_no: number;
}

export interface MsgIdJson {
  sender: number;
  seq: number;
}

export interface ApiEvent {
  event_no: number;
  process: number;
  kind: string;
  ts_enter: number;
  ts_exit: number;
  ts_corrected: [number, number];
  msg?: MsgIdJson;
  peer?: number;
  tag?: number;
  length?: number;
  wildcard?: boolean;
  filter_tag?: number;
  payload_ref?: string;
  source_loc?: [string, number];
}

export interface HistoryEntry {
  id: string;
  parent: string | null;
  label: string;
  active: boolean;
}

export interface SessionInfo {
  id: string;
  meta: Record<string, unknown>;
  event_counts: Record<string, number>;
  has_schedule: boolean;
  outputs: Record<string, string> | null;
  history: HistoryEntry[];
}

export interface EventsPage {
  total: number;
  from: number;
  events: ApiEvent[];
}

export interface EdgeList {
  message_edges: { from: EventRefJson; to: EventRefJson }[];
  dangling_receives: EventRefJson[];
}

export interface Finding {
  kind: string;
  events: EventRefJson[];
  detail: string;
}

export interface RaceReport {
  recv: EventRefJson;
  observed: MsgIdJson | null;
  candidates: MsgIdJson[];
  method: string;
}

export interface EventInfo {
  event: EventRefJson;
  kind: string;
  peer: number | null;
  tag: number | null;
  length: number | null;
  wildcard: boolean | null;
  candidate_count: number | null;
  source_loc: [string, number] | null;
  vector_clock: number[];
  msg: MsgIdJson | null;
  snapshot?: Record<string, unknown>;
}

export interface BreakpointCut {
  anchor: EventRefJson;
  stop_after: Record<string, number>;
}

export interface ManipulateResult {
  session: string;
  outputs: Record<string, string>;
  history: HistoryEntry[];
}

export interface ExploreResult {
  executions: number;
  truncated: boolean;
  distinct_outputs: string[];
  items: { index: number; fingerprint: string; outputs: Record<string, string> }[];
}

export interface HeatData {
  collection_id: string;
  shape: number[];
  values: (number | null)[];
  mask: boolean[];
  raw_values: (number | null)[];
  min: number;
  max: number;
}

export interface MappingData {
  collection_id: string;
  shape: number[];
  owners: number[];
}

export interface AnalysisReport {
  program: string;
  world_size: number;
  event_counts: Record<string, number>;
  findings: Finding[];
  wildcard_receives: {
    event: EventRefJson;
    candidate_count: number;
    observed: MsgIdJson | null;
  }[];
  corrected_timeline: {
    epsilon: number;
    raw_causality_violations: number;
    corrected_causality_violations: number;
  };
  array_collections: string[];
}

export function refKey(ref: EventRefJson): string {
  return `${ref.process}:${ref.event_no}`;
}

export function msgLabel(m: MsgIdJson): string {
  return `${m.sender}:${m.seq}`;
}
