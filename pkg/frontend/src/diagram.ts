// Space-time diagram rendering. One horizontal lane per process, events
// placed left-to-right by timestamp (corrected by default), arrows for
// message edges, red badges on finding events, a distinct ring marker on
// wildcard receives, and an optional breakpoint-cut frontier. Everything
// is built from API data alone.

import type {
  ApiEvent,
  BreakpointCut,
  EdgeList,
  EventRefJson,
  Finding,
} from "./model";
import { refKey } from "./model";

export interface DiagramOptions {
  useCorrected: boolean;
  width?: number;
  onSelect?: (ref: EventRefJson) => void;
}

export interface Layout {
  positions: Map<string, { x: number; y: number }>;
  laneY: Map<number, number>;
  width: number;
  height: number;
}

const PAD_X = 70;
const PAD_Y = 28;
const LANE_GAP = 56;
const MIN_WIDTH = 480;

function timeOf(ev: ApiEvent, useCorrected: boolean): number {
  return useCorrected ? ev.ts_corrected[0] : ev.ts_enter;
}

export function layoutDiagram(events: ApiEvent[], opts: DiagramOptions): Layout {
  const processes = [...new Set(events.map((e) => e.process))].sort((a, b) => a - b);
  const laneY = new Map<number, number>();
  processes.forEach((p, i) => laneY.set(p, PAD_Y + i * LANE_GAP));
  const times = events.map((e) => timeOf(e, opts.useCorrected));
  const tMin = Math.min(...times, 0);
  const tMax = Math.max(...times, 1);
  const width = Math.max(opts.width ?? 900, MIN_WIDTH);
  const scale = (width - 2 * PAD_X) / Math.max(tMax - tMin, 1);
  const positions = new Map<string, { x: number; y: number }>();
  for (const ev of events) {
    positions.set(refKey({ process: ev.process, event_no: ev.event_no }), {
      x: PAD_X + (timeOf(ev, opts.useCorrected) - tMin) * scale,
      y: laneY.get(ev.process)!,
    });
  }
  return {
    positions,
    laneY,
    width,
    height: PAD_Y + processes.length * LANE_GAP,
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

/** X coordinate of the cut frontier in one lane: just after the last
 * included event, or just before the lane's first event when nothing is
 * included (stop_after = -1). */
export function frontierX(
  cut: BreakpointCut,
  events: ApiEvent[],
  layout: Layout,
  process: number,
): number {
  const stop = cut.stop_after[String(process)] ?? -1;
  const lane = events
    .filter((e) => e.process === process)
    .sort((a, b) => a.event_no - b.event_no);
  if (lane.length === 0) return PAD_X - 14;
  const xOf = (ev: ApiEvent) =>
    layout.positions.get(refKey({ process: ev.process, event_no: ev.event_no }))!.x;
  if (stop < 0) return xOf(lane[0]) - 14;
  const last = lane.find((e) => e.event_no === stop) ?? lane[lane.length - 1];
  const next = lane.find((e) => e.event_no === stop + 1);
  if (!next) return xOf(last) + 14;
  return (xOf(last) + xOf(next)) / 2;
}

export function renderDiagram(
  events: ApiEvent[],
  edges: EdgeList,
  findings: Finding[],
  opts: DiagramOptions,
  cut?: BreakpointCut | null,
  selected?: EventRefJson | null,
): SVGSVGElement {
  const layout = layoutDiagram(events, opts);
  const svg = svgEl("svg", {
    width: layout.width,
    height: layout.height,
    class: "diagram",
    viewBox: `0 0 ${layout.width} ${layout.height}`,
  });

  const defs = svgEl("defs", {});
  const marker = svgEl("marker", {
    id: "arrowhead", markerWidth: 8, markerHeight: 8,
    refX: 7, refY: 3, orient: "auto",
  });
  marker.appendChild(svgEl("path", { d: "M0,0 L7,3 L0,6 Z", fill: "#555" }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const [p, y] of [...layout.laneY.entries()].sort((a, b) => a[0] - b[0])) {
    svg.appendChild(svgEl("line", {
      x1: PAD_X - 40, y1: y, x2: layout.width - 20, y2: y,
      class: "lane-line", stroke: "#ccc",
    }));
    const label = svgEl("text", {
      x: 8, y: y + 4, class: "lane-label", fill: "#333", "font-size": 13,
    });
    label.textContent = `P${p}`;
    svg.appendChild(label);
  }

  for (const edge of edges.message_edges) {
    const a = layout.positions.get(refKey(edge.from));
    const b = layout.positions.get(refKey(edge.to));
    if (!a || !b) continue;
    svg.appendChild(svgEl("line", {
      x1: a.x, y1: a.y, x2: b.x, y2: b.y,
      class: "message-arrow", stroke: "#555", "marker-end": "url(#arrowhead)",
      "data-from": refKey(edge.from), "data-to": refKey(edge.to),
    }));
  }

  const badEvents = new Set<string>();
  for (const f of findings) for (const e of f.events) badEvents.add(refKey(e));

  for (const ev of events) {
    const ref = { process: ev.process, event_no: ev.event_no };
    const key = refKey(ref);
    const pos = layout.positions.get(key)!;
    const group = svgEl("g", { class: "event-group", "data-ref": key });
    if (ev.kind === "RECV" && ev.wildcard) {
      group.appendChild(svgEl("circle", {
        cx: pos.x, cy: pos.y, r: 10,
        class: "wildcard-marker", fill: "none",
        stroke: "#7b2ff2", "stroke-width": 2, "stroke-dasharray": "3 2",
      }));
    }
    if (badEvents.has(key)) {
      group.appendChild(svgEl("circle", {
        cx: pos.x, cy: pos.y, r: 13,
        class: "finding-badge", fill: "none", stroke: "#d62728", "stroke-width": 2.5,
      }));
    }
    const glyph = svgEl("circle", {
      cx: pos.x, cy: pos.y, r: 6,
      class: `event-glyph kind-${ev.kind}` +
        (selected && refKey(selected) === key ? " selected" : ""),
      fill: glyphColor(ev.kind),
      "data-ref": key,
    });
    glyph.addEventListener("click", () => opts.onSelect?.(ref));
    group.appendChild(glyph);
    svg.appendChild(group);
  }

  if (cut) {
    const lanes = [...layout.laneY.entries()].sort((a, b) => a[0] - b[0]);
    const pts: string[] = [];
    for (const [p, y] of lanes) {
      const x = frontierX(cut, events, layout, p);
      pts.push(`${x},${y - LANE_GAP / 2 + 6}`);
      pts.push(`${x},${y + LANE_GAP / 2 - 6}`);
    }
    svg.appendChild(svgEl("polyline", {
      points: pts.join(" "),
      class: "cut-frontier", fill: "none",
      stroke: "#e08700", "stroke-width": 2.5, "stroke-dasharray": "6 3",
    }));
  }

  return svg;
}

function glyphColor(kind: string): string {
  switch (kind) {
    case "SEND": return "#1f77b4";
    case "RECV": return "#2ca02c";
    case "VAR_INSPECT":
    case "ARRAY_TRACE":
    case "QUEUE_INSPECT": return "#9467bd";
    default: return "#888";
  }
}
