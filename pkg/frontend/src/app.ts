// Application wiring: loads a session, renders the diagram and panels,
// and handles selection, breakpoint placement, manipulation (with a
// side-by-side before/after view), arrays, and exploration.

import { ApiClient } from "./api";
import { frontierX, layoutDiagram, renderDiagram } from "./diagram";
import type {
  ApiEvent,
  BreakpointCut,
  EdgeList,
  EventRefJson,
  Finding,
  MsgIdJson,
  SessionInfo,
} from "./model";
import { refKey } from "./model";
import {
  arrayPanel,
  eventInfoPanel,
  executionsPanel,
  historyBar,
  outputsLine,
  racePanel,
} from "./panels";

interface LoadedView {
  session: SessionInfo;
  events: ApiEvent[];
  edges: EdgeList;
  findings: Finding[];
}

export class App {
  useCorrected = true;
  selected: EventRefJson | null = null;
  cut: BreakpointCut | null = null;
  view: LoadedView | null = null;
  compare: LoadedView | null = null;  // manipulated run shown beside the base

  private root: HTMLElement;

  constructor(root: HTMLElement, private api: ApiClient) {
    this.root = root;
  }

  private async fetchView(sessionId?: string): Promise<LoadedView> {
    const session = await this.api.session(sessionId);
    const [events, edges, findings] = await Promise.all([
      this.api.events(session.id),
      this.api.edges(session.id),
      this.api.findings(session.id),
    ]);
    return { session, events: events.events, edges, findings: findings.findings };
  }

  async load(sessionId?: string): Promise<void> {
    this.view = await this.fetchView(sessionId);
    this.selected = null;
    this.cut = null;
    this.compare = null;
    this.render();
  }

  async selectEvent(ref: EventRefJson): Promise<void> {
    if (!this.view) return;
    this.selected = ref;
    const info = await this.api.eventInfo(refKey(ref), this.view.session.id);
    const panel = this.panelHost("event-info-host");
    panel.replaceChildren(eventInfoPanel(info));
    const raceHost = this.panelHost("race-host");
    raceHost.replaceChildren();
    if (info.kind === "RECV" && info.wildcard && this.view.session.has_schedule) {
      const report = await this.api.races(refKey(ref), "exact", this.view.session.id);
      raceHost.replaceChildren(
        racePanel(report, (candidate) => void this.manipulate(ref, candidate)),
      );
    }
    this.renderDiagrams();
  }

  async placeBreakpoint(ref: EventRefJson): Promise<void> {
    if (!this.view) return;
    this.cut = await this.api.breakpoint(refKey(ref), this.view.session.id);
    this.renderDiagrams();
  }

  async manipulate(at: EventRefJson, force: MsgIdJson, suffixSeed = 1): Promise<void> {
    if (!this.view) return;
    const result = await this.api.manipulate(
      refKey(at), force, suffixSeed, this.view.session.id,
    );
    this.compare = await this.fetchView(result.session);
    this.view.session.history = result.history;
    this.render();
  }

  async showArray(collection: string): Promise<void> {
    if (!this.view) return;
    const heat = await this.api.arrayHeat(collection, this.view.session.id);
    const mapping = await this.api.arrayMapping(collection, this.view.session.id);
    let showOwners = false;
    const host = this.panelHost("array-host");
    const draw = () => {
      host.replaceChildren(arrayPanel(heat, mapping, showOwners, () => {
        showOwners = !showOwners;
        draw();
      }));
    };
    draw();
  }

  async explore(maxExecutions = 256, maxDepth = 64): Promise<void> {
    if (!this.view) return;
    const result = await this.api.explore(
      { max_executions: maxExecutions, max_depth: maxDepth },
      this.view.session.id,
    );
    this.panelHost("executions-host").replaceChildren(executionsPanel(result));
  }

  toggleTimeAxis(): void {
    this.useCorrected = !this.useCorrected;
    this.renderDiagrams();
  }

  private panelHost(id: string): HTMLElement {
    let host = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!host) {
      host = document.createElement("div");
      host.id = id;
      this.root.querySelector("#panels")?.appendChild(host);
    }
    return host;
  }

  private diagramFor(view: LoadedView, host: HTMLElement, withCut: boolean): void {
    const svg = renderDiagram(
      view.events, view.edges, view.findings,
      {
        useCorrected: this.useCorrected,
        width: 900,
        onSelect: (ref) => void this.selectEvent(ref),
      },
      withCut ? this.cut : null,
      this.selected,
    );
    host.replaceChildren(svg);
    host.appendChild(outputsLine(view.session.outputs));
  }

  private renderDiagrams(): void {
    if (!this.view) return;
    const before = this.root.querySelector<HTMLElement>("#diagram-before");
    if (before) this.diagramFor(this.view, before, true);
    const after = this.root.querySelector<HTMLElement>("#diagram-after");
    if (after) {
      if (this.compare) {
        after.classList.add("compare-after");
        this.diagramFor(this.compare, after, false);
      } else {
        after.classList.remove("compare-after");
        after.replaceChildren();
      }
    }
  }

  render(): void {
    if (!this.view) return;
    const meta = this.view.session.meta as { program?: string; world_size?: number };
    this.root.innerHTML = `
      <header>
        <h1>mpdbg</h1>
        <span class="program-name">${meta.program ?? "?"} (np=${meta.world_size ?? "?"})</span>
        <button id="time-toggle">${this.useCorrected ? "corrected time" : "raw time"}</button>
        <button id="breakpoint-btn" ${this.selected ? "" : "disabled"}>breakpoint at selection</button>
        <button id="explore-btn">explore executions</button>
        <span id="array-buttons"></span>
      </header>
      <div id="history-host"></div>
      <main>
        <div class="diagrams">
          <div id="diagram-before"></div>
          <div id="diagram-after"></div>
        </div>
        <aside id="panels">
          <div id="event-info-host"></div>
          <div id="race-host"></div>
          <div id="array-host"></div>
          <div id="executions-host"></div>
        </aside>
      </main>
    `;
    this.root.querySelector("#time-toggle")!.addEventListener("click", () => {
      this.toggleTimeAxis();
      this.render();
    });
    this.root.querySelector("#breakpoint-btn")!.addEventListener("click", () => {
      if (this.selected) void this.placeBreakpoint(this.selected);
    });
    this.root.querySelector("#explore-btn")!.addEventListener("click", () => {
      void this.explore();
    });
    const historyHost = this.root.querySelector<HTMLElement>("#history-host")!;
    historyHost.replaceChildren(
      historyBar(this.view.session.history, (id) => void this.load(id)),
    );
    void this.api.report(this.view.session.id).then((report) => {
      const span = this.root.querySelector<HTMLElement>("#array-buttons");
      if (!span) return;
      for (const cid of report.array_collections) {
        const btn = document.createElement("button");
        btn.className = "array-btn";
        btn.textContent = `array ${cid}`;
        btn.addEventListener("click", () => void this.showArray(cid));
        span.appendChild(btn);
      }
    });
    this.renderDiagrams();
  }
}

export { ApiClient, frontierX, layoutDiagram, renderDiagram };
