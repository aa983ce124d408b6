// End-to-end conformance against a live session service: the diagram shows
// both wildcard markers, the race panel lists both candidates, and a
// manipulation round-trip displays the alternative output. The service is
// the real Python backend spawned as a subprocess; the DOM runs in
// happy-dom because no browser binaries are installable here.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import http from "node:http";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api";
import { App } from "../src/app";

const REPO = resolve(__dirname, "..", "..");
const PY_ENV = { ...process.env, PYTHONPATH: join(REPO, "src") };
const PORT = 18731 + (process.pid % 97);
const BASE = `http://127.0.0.1:${PORT}`;

// happy-dom patches global fetch with a CORS-enforcing client; talk to the
// service over node:http directly instead.
const nodeFetch: FetchLike = (input, init) =>
  new Promise((resolvep, reject) => {
    const headers: Record<string, string> = { ...(init?.headers ?? {}) };
    if (init?.body) headers["Content-Length"] = String(Buffer.byteLength(init.body));
    const req = http.request(
      input,
      { method: init?.method ?? "GET", headers },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (c: Buffer) => chunks.push(c));
        res.on("end", () => {
          const text = Buffer.concat(chunks).toString("utf-8");
          resolvep({
            ok: (res.statusCode ?? 500) < 400,
            status: res.statusCode ?? 500,
            json: async () => JSON.parse(text || "null"),
          });
        });
      },
    );
    req.on("error", reject);
    if (init?.body) req.write(init.body);
    req.end();
  });

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await nodeFetch(`${BASE}/api/session`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  const work = mkdtempSync(join(tmpdir(), "mpdbg-e2e-"));
  const trace = join(work, "two_senders.jsonl");
  const run = spawnSync(
    "python3",
    ["-m", "mpdbg", "run", "two_senders", "--np", "3", "--seed", "1", "--out", trace],
    { env: PY_ENV, encoding: "utf-8" },
  );
  if (run.status !== 0) throw new Error(`recording failed: ${run.stderr}`);
  server = spawn(
    "python3",
    ["-m", "mpdbg", "serve", "--port", String(PORT), "--trace", trace],
    { env: PY_ENV, stdio: "ignore" },
  );
  await waitForServer();
});

afterAll(() => {
  server?.kill();
});

function makeApp(): { app: App; root: HTMLElement } {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const api = new ApiClient(BASE, nodeFetch);
  return { app: new App(root, api), root };
}

describe("UI conformance against the live service", () => {
  it("renders the space-time diagram with two wildcard markers", async () => {
    const { app, root } = makeApp();
    await app.load();
    expect(root.querySelectorAll(".wildcard-marker").length).toBe(2);
    expect(root.querySelectorAll(".event-glyph").length).toBe(10);
    expect(root.querySelectorAll(".message-arrow").length).toBe(2);
    expect(root.querySelectorAll(".finding-badge").length).toBe(0);
  });

  it("event info shows the unknown partner and the race count verbatim", async () => {
    const { app, root } = makeApp();
    await app.load();
    await app.selectEvent({ process: 0, event_no: 1 });
    const partner = root.querySelector(".partner-unknown .info-value");
    expect(partner?.textContent).toBe("?");
    const api = new ApiClient(BASE, nodeFetch);
    const fromApi = await api.races("0:1", "exact");
    const count = root.querySelector(".candidate-count .info-value");
    expect(count?.textContent).toBe(String(fromApi.candidates.length));
    expect(fromApi.candidates.length).toBe(2);
  });

  it("race panel lists both candidates", async () => {
    const { app, root } = makeApp();
    await app.load();
    await app.selectEvent({ process: 0, event_no: 1 });
    const items = root.querySelectorAll(".race-candidate");
    expect(items.length).toBe(2);
    const labels = [...root.querySelectorAll(".race-pick")].map((b) => b.textContent);
    expect(labels.some((l) => l?.startsWith("1:0"))).toBe(true);
    expect(labels.some((l) => l?.startsWith("2:0"))).toBe(true);
  });

  it("manipulation round-trip shows the alternative output side by side", async () => {
    const { app, root } = makeApp();
    await app.load();
    const baseOutput = app.view?.session.outputs?.["0"];
    expect(baseOutput === "12" || baseOutput === "21").toBe(true);
    await app.selectEvent({ process: 0, event_no: 1 });
    const api = new ApiClient(BASE, nodeFetch);
    const report = await api.races("0:1", "exact", app.view!.session.id);
    const other = report.candidates.find(
      (c) => !(c.sender === report.observed!.sender && c.seq === report.observed!.seq),
    )!;
    await app.manipulate({ process: 0, event_no: 1 }, other, 5);
    const after = root.querySelector<HTMLElement>("#diagram-after");
    expect(after?.classList.contains("compare-after")).toBe(true);
    const afterOutputs = after?.querySelector(".outputs-line")?.textContent ?? "";
    const flipped = baseOutput === "12" ? "21" : "12";
    expect(afterOutputs).toContain(`P0="${flipped}"`);
    // the original stays visible above the manipulated run
    const beforeOutputs = root
      .querySelector("#diagram-before .outputs-line")?.textContent ?? "";
    expect(beforeOutputs).toContain(`P0="${baseOutput}"`);
    // history offers both runs
    expect(root.querySelectorAll(".history-entry").length).toBeGreaterThanOrEqual(2);
  });

  it("breakpoint placement draws a consistent frontier", async () => {
    const { app, root } = makeApp();
    await app.load();
    await app.selectEvent({ process: 0, event_no: 2 });
    await app.placeBreakpoint({ process: 0, event_no: 2 });
    expect(root.querySelectorAll(".cut-frontier").length).toBe(1);
    expect(app.cut?.stop_after).toEqual({ "0": 2, "1": 1, "2": 1 });
  });

  it("exploration panel reports both executions and their fingerprints", async () => {
    const { app, root } = makeApp();
    await app.load();
    await app.explore();
    const summary = root.querySelector(".explore-summary")?.textContent ?? "";
    expect(summary).toContain("2 executions");
    expect(root.querySelectorAll(".execution-item").length).toBe(2);
    expect(root.querySelector(".truncated-indicator")).toBeNull();
  });
});
