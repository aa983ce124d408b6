// Side panels: event info, racing messages, arrays, explored executions,
// session history. Plain DOM, numbers copied verbatim from API responses.

import type {
  EventInfo,
  ExploreResult,
  HeatData,
  HistoryEntry,
  MappingData,
  MsgIdJson,
  RaceReport,
} from "./model";
import { msgLabel } from "./model";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function row(dl: HTMLElement, label: string, value: string, cls?: string): void {
  const div = el("div", "info-row" + (cls ? ` ${cls}` : ""));
  div.appendChild(el("span", "info-label", label));
  div.appendChild(el("span", "info-value", value));
  dl.appendChild(div);
}

export function eventInfoPanel(info: EventInfo): HTMLElement {
  const panel = el("div", "event-info-panel");
  panel.appendChild(el("h3", undefined, `Event ${info.event.process}:${info.event.event_no}`));
  row(panel, "kind", info.kind);
  if (info.kind === "RECV" && info.wildcard) {
    // wildcard receives show an unknown partner plus the race count
    row(panel, "partner", "?", "partner-unknown");
    row(panel, "racing messages", String(info.candidate_count ?? 0), "candidate-count");
  } else if (info.peer !== null) {
    row(panel, "partner", `P${info.peer}`);
  }
  if (info.msg) row(panel, "message", msgLabel(info.msg));
  if (info.tag !== null) row(panel, "tag", String(info.tag));
  if (info.length !== null) row(panel, "length", `${info.length} bytes`);
  if (info.source_loc) {
    row(panel, "source", `${info.source_loc[0]}:${info.source_loc[1]}`, "source-ref");
  }
  row(panel, "vector clock", `[${info.vector_clock.join(", ")}]`);
  if (info.snapshot) {
    const kind = info.snapshot["snapshot_kind"];
    if (kind === "var") {
      row(panel, `var ${info.snapshot["name"]}`, JSON.stringify(info.snapshot["value"]),
          "snapshot-value");
    } else if (kind === "queue") {
      const pend = (info.snapshot["pending"] as MsgIdJson[]).map(msgLabel).join(", ");
      row(panel, "pending", pend || "(empty)", "snapshot-value");
    } else if (kind === "array") {
      row(panel, "array", JSON.stringify(info.snapshot["values"]), "snapshot-value");
    }
  }
  return panel;
}

export function racePanel(
  report: RaceReport,
  onPick: (candidate: MsgIdJson) => void,
): HTMLElement {
  const panel = el("div", "race-panel");
  panel.appendChild(el("h3", undefined,
    `Racing messages at ${report.recv.process}:${report.recv.event_no}`));
  panel.appendChild(el("div", "race-method", report.method));
  const list = el("ul", "race-candidates");
  for (const cand of report.candidates) {
    const item = el("li", "race-candidate");
    const observed = report.observed &&
      cand.sender === report.observed.sender && cand.seq === report.observed.seq;
    const btn = el("button", "race-pick", msgLabel(cand) + (observed ? " (observed)" : ""));
    btn.dataset.sender = String(cand.sender);
    btn.dataset.seq = String(cand.seq);
    btn.addEventListener("click", () => onPick(cand));
    item.appendChild(btn);
    list.appendChild(item);
  }
  panel.appendChild(list);
  return panel;
}

function heatColor(v: number): string {
  // cold blue to hot red
  const hue = 240 - 240 * v;
  return `hsl(${hue}, 85%, 55%)`;
}

export function arrayPanel(
  heat: HeatData,
  mapping: MappingData | null,
  showOwners: boolean,
  onToggle: () => void,
): HTMLElement {
  const panel = el("div", "array-panel");
  panel.appendChild(el("h3", undefined, `Array ${heat.collection_id}`));
  const legend = el("div", "heat-legend");
  legend.appendChild(el("span", "heat-min", `min ${heat.min}`));
  legend.appendChild(el("span", "heat-max", `max ${heat.max}`));
  panel.appendChild(legend);
  const toggle = el("button", "owners-toggle",
    showOwners ? "show values" : "show owner mapping");
  toggle.addEventListener("click", onToggle);
  panel.appendChild(toggle);

  const [rows, cols] = heat.shape.length === 2 ? heat.shape : [1, heat.shape[0]];
  const table = el("table", "array-grid");
  for (let r = 0; r < rows; r++) {
    const tr = el("tr");
    for (let c = 0; c < cols; c++) {
      const i = r * cols + c;
      const td = el("td", "array-cell");
      if (showOwners && mapping) {
        td.textContent = String(mapping.owners[i]);
        td.className += ` owner-${mapping.owners[i]}`;
      } else {
        const v = heat.values[i];
        if (v === null) {
          td.className += " absent";
          td.textContent = "-";
        } else {
          td.style.backgroundColor = heatColor(v);
          td.title = String(heat.raw_values[i]);
        }
      }
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  panel.appendChild(table);
  return panel;
}

export function executionsPanel(result: ExploreResult): HTMLElement {
  const panel = el("div", "executions-panel");
  panel.appendChild(el("h3", undefined, "Explored executions"));
  const summary = el("div", "explore-summary",
    `${result.executions} executions, ${result.distinct_outputs.length} distinct outputs`);
  panel.appendChild(summary);
  if (result.truncated) {
    panel.appendChild(el("div", "truncated-indicator", "truncated: limits reached"));
  }
  const list = el("ul", "execution-list");
  for (const item of result.items) {
    const li = el("li", "execution-item");
    li.appendChild(el("code", "execution-fingerprint", item.fingerprint));
    const outs = Object.entries(item.outputs)
      .filter(([, v]) => v.length > 0)
      .map(([r, v]) => `P${r}="${v}"`)
      .join(" ");
    li.appendChild(el("span", "execution-outputs", outs ? ` ${outs}` : " (no output)"));
    list.appendChild(li);
  }
  panel.appendChild(list);
  return panel;
}

export function historyBar(
  history: HistoryEntry[],
  onSwitch: (id: string) => void,
): HTMLElement {
  const bar = el("div", "history-bar");
  bar.appendChild(el("span", "history-title", "runs:"));
  for (const entry of history) {
    const btn = el("button",
      "history-entry" + (entry.active ? " active" : ""),
      entry.label ? `${entry.id} (${entry.label})` : entry.id);
    btn.dataset.session = entry.id;
    btn.addEventListener("click", () => onSwitch(entry.id));
    bar.appendChild(btn);
  }
  return bar;
}

export function outputsLine(outputs: Record<string, string> | null): HTMLElement {
  const div = el("div", "outputs-line");
  if (!outputs) {
    div.textContent = "outputs: (not recorded)";
    return div;
  }
  const parts = Object.entries(outputs)
    .filter(([, v]) => v.length > 0)
    .map(([r, v]) => `P${r}="${v}"`);
  div.textContent = "outputs: " + (parts.join("  ") || "(none)");
  return div;
}
