"""JSON session service consumed by the web UI (and anything else).

Stateless mirror of the library: every endpoint result equals the
corresponding library call on the same trace. Reads run concurrently over
immutable session data; manipulation and exploration are serialized by the
session store. Optionally serves the built single-page UI from a static
directory.
"""

from __future__ import annotations

import json
import mimetypes
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import analysis, arrays, tracefile
from .analysis import EXACT_REPLAY, HB_FILTER
from .errors import (
    InvalidManipulation,
    NotWildcard,
    ScheduleInfeasible,
    ToolError,
    UnknownEvent,
)
from .graph import EventRef
from .runtime import MessageId
from .session import SessionStore, build_report, parse_event_ref
from .tracefile import canonical_json, event_to_obj


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _event_obj_with_correction(session, ev) -> dict:
    obj = event_to_obj(ev)
    ref = EventRef(ev.process, ev.event_no)
    enter, exit_ = session.corrected.adjusted[ref]
    obj["ts_corrected"] = [enter, exit_]
    return obj


class _Api:
    """Route table and handlers, kept separate from the HTTP plumbing."""

    def __init__(self, store: SessionStore):
        self.store = store

    # -- GET ---------------------------------------------------------------

    def session(self, q) -> dict:
        session = self.store.get(q.get("id"))
        counts = {str(r): len(session.trace.events.get(r, []))
                  for r in sorted(session.trace.events)}
        return {
            "id": session.id,
            "meta": session.trace.meta,
            "event_counts": counts,
            "has_schedule": session.schedule is not None,
            "outputs": (
                {str(r): v.decode("utf-8", "replace") for r, v in session.outputs.items()}
                if session.outputs is not None else None
            ),
            "history": self.store.history(),
        }

    def events(self, q) -> dict:
        session = self.store.get(q.get("session"))
        evs = []
        if q.get("process") is not None:
            ranks = [int(q["process"])]
        else:
            ranks = sorted(session.trace.events)
        for r in ranks:
            evs.extend(session.trace.events.get(r, []))
        evs.sort(key=lambda e: (e.process, e.event_no))
        start = int(q.get("from") or 0)
        limit = int(q.get("limit") or 1000)
        page = evs[start:start + limit]
        return {
            "total": len(evs),
            "from": start,
            "events": [_event_obj_with_correction(session, e) for e in page],
        }

    def edges(self, q) -> dict:
        session = self.store.get(q.get("session"))
        g = session.graph
        return {
            "message_edges": [
                {
                    "from": {"process": s.process, "event_no": s.event_no},
                    "to": {"process": r.process, "event_no": r.event_no},
                }
                for r, s in sorted(g.message_edge.items())
            ],
            "dangling_receives": [
                {"process": r.process, "event_no": r.event_no}
                for r in g.dangling_receives
            ],
        }

    def findings(self, q) -> dict:
        session = self.store.get(q.get("session"))
        return {"findings": [f.to_json_obj() for f in session.findings]}

    def report(self, q) -> dict:
        return build_report(self.store.get(q.get("session")))

    def races(self, q) -> dict:
        session = self.store.get(q.get("session"))
        if not q.get("event"):
            raise ApiError(400, "missing event parameter")
        try:
            ref = parse_event_ref(q["event"])
        except ValueError as exc:
            raise ApiError(400, str(exc)) from exc
        mode = q.get("mode", "exact")
        if mode not in ("hb", "exact"):
            raise ApiError(400, f"unknown mode {mode!r}")
        if mode == "exact" and session.schedule is None:
            raise ApiError(409, "session has no schedule; exact mode unavailable")
        report = session.races(ref, EXACT_REPLAY if mode == "exact" else HB_FILTER)
        return report.to_json_obj()

    def event_info(self, q) -> dict:
        session = self.store.get(q.get("session"))
        if not q.get("event"):
            raise ApiError(400, "missing event parameter")
        ref = parse_event_ref(q["event"])
        info = analysis.event_info(session.graph, ref, session.schedule)
        obj = info.to_json_obj()
        if info.snapshot is not None:
            obj["snapshot"] = tracefile.snapshot_to_obj("inline", info.snapshot)
        return obj

    def array_heat(self, q, collection: str) -> dict:
        session = self.store.get(q.get("session"))
        groups = session.array_collections()
        if collection not in groups:
            raise ApiError(404, f"no array collection {collection!r}")
        view = arrays.assemble(groups[collection])
        values, lo, hi = arrays.heat_diagram(view)
        return {
            "collection_id": collection,
            "shape": list(view.shape),
            "values": values,
            "mask": view.present_mask,
            "raw_values": view.values,
            "min": lo,
            "max": hi,
        }

    def array_mapping(self, q, collection: str) -> dict:
        session = self.store.get(q.get("session"))
        groups = session.array_collections()
        if collection not in groups:
            raise ApiError(404, f"no array collection {collection!r}")
        info = groups[collection][0].info
        owners = arrays.mapping_view(info, session.trace.world_size)
        return {
            "collection_id": collection,
            "shape": list(info.global_shape),
            "owners": owners,
        }

    def execution_trace(self, q, index: int) -> dict:
        session = self.store.get(q.get("session"))
        es = session.execution_set
        if es is None or not (0 <= index < len(es.executions)):
            raise ApiError(404, f"no explored execution {index}")
        ex = es.executions[index]
        return {
            "index": index,
            "fingerprint": ex.fingerprint,
            "outputs": {str(r): v.decode("utf-8", "replace") for r, v in ex.outputs.items()},
            "events": [
                event_to_obj(ev) for ev in ex.trace.iter_events()
            ],
            "decisions": [
                {"process": d.process, "recv_event_no": d.recv_event_no,
                 "msg": {"sender": d.msg.sender, "seq": d.msg.seq}}
                for d in ex.schedule.decisions
            ],
        }

    # -- POST ----------------------------------------------------------------

    def breakpoint(self, q, body) -> dict:
        session = self.store.get(q.get("session") or body.get("session"))
        if "event" not in body:
            raise ApiError(400, "missing event field")
        try:
            ref = parse_event_ref(body["event"])
        except ValueError as exc:
            raise ApiError(400, str(exc)) from exc
        cut = analysis.compute_breakpoint(session.graph, ref)
        return cut.to_json_obj()

    def manipulate(self, q, body) -> dict:
        for fieldname in ("event", "force"):
            if fieldname not in body:
                raise ApiError(400, f"missing {fieldname} field")
        try:
            ref = parse_event_ref(body["event"])
            force = MessageId(int(body["force"]["sender"]), int(body["force"]["seq"]))
            suffix_seed = int(body.get("suffix_seed", 0))
        except (ValueError, KeyError, TypeError) as exc:
            raise ApiError(400, f"malformed manipulation request: {exc}") from exc
        session = self.store.manipulate(
            q.get("session") or body.get("session"), ref, force, suffix_seed
        )
        return {
            "session": session.id,
            "outputs": {str(r): v.decode("utf-8", "replace") for r, v in session.outputs.items()},
            "history": self.store.history(),
        }

    def explore(self, q, body) -> dict:
        limits = body.get("limits", {})
        es = self.store.explore(
            q.get("session") or body.get("session"),
            max_executions=int(limits.get("max_executions", 1024)),
            max_depth=int(limits.get("max_depth", 64)),
        )
        return {
            "executions": len(es.executions),
            "truncated": es.truncated,
            "distinct_outputs": sorted(es.distinct_outputs),
            "items": [
                {
                    "index": i,
                    "fingerprint": ex.fingerprint,
                    "outputs": {
                        str(r): v.decode("utf-8", "replace") for r, v in ex.outputs.items()
                    },
                }
                for i, ex in enumerate(es.executions)
            ],
        }


_GET_ROUTES = [
    (re.compile(r"^/api/session$"), "session"),
    (re.compile(r"^/api/events$"), "events"),
    (re.compile(r"^/api/graph/edges$"), "edges"),
    (re.compile(r"^/api/findings$"), "findings"),
    (re.compile(r"^/api/report$"), "report"),
    (re.compile(r"^/api/races$"), "races"),
    (re.compile(r"^/api/event$"), "event_info"),
]


class Handler(BaseHTTPRequestHandler):
    api: _Api = None  # installed by serve()
    ui_dir: str | None = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, obj) -> None:
        data = canonical_json(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _dispatch(self, handler, *args) -> None:
        try:
            self._send_json(200, handler(*args))
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})
        except (UnknownEvent, NotWildcard) as exc:
            self._send_json(404, {"error": str(exc)})
        except InvalidManipulation as exc:
            self._send_json(409, {"error": "InvalidManipulation", "detail": str(exc)})
        except ScheduleInfeasible as exc:
            self._send_json(409, {"error": "ScheduleInfeasible", "detail": str(exc)})
        except ValueError as exc:
            self._send_json(400, {"error": str(exc)})
        except ToolError as exc:
            self._send_json(409, {"error": str(exc)})

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        url = urlparse(self.path)
        q = {k: v[0] for k, v in parse_qs(url.query).items()}
        for pattern, name in _GET_ROUTES:
            if pattern.match(url.path):
                self._dispatch(getattr(self.api, name), q)
                return
        m = re.match(r"^/api/array/([^/]+)/(heat|mapping)$", url.path)
        if m:
            fn = self.api.array_heat if m.group(2) == "heat" else self.api.array_mapping
            self._dispatch(fn, q, m.group(1))
            return
        m = re.match(r"^/api/executions/(\d+)/trace$", url.path)
        if m:
            self._dispatch(self.api.execution_trace, q, int(m.group(1)))
            return
        if url.path.startswith("/api/"):
            self._send_json(404, {"error": f"no such endpoint {url.path}"})
            return
        self._serve_static(url.path)

    def do_POST(self) -> None:
        url = urlparse(self.path)
        q = {k: v[0] for k, v in parse_qs(url.query).items()}
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw.decode("utf-8") or "{}")
        except json.JSONDecodeError:
            self._send_json(400, {"error": "request body is not valid JSON"})
            return
        if not isinstance(body, dict):
            self._send_json(400, {"error": "request body must be a JSON object"})
            return
        routes = {
            "/api/breakpoint": self.api.breakpoint,
            "/api/manipulate": self.api.manipulate,
            "/api/explore": self.api.explore,
        }
        fn = routes.get(url.path)
        if fn is None:
            self._send_json(404, {"error": f"no such endpoint {url.path}"})
            return
        self._dispatch(fn, q, body)

    def _serve_static(self, path: str) -> None:
        if self.ui_dir is None:
            self._send_json(404, {"error": "no UI built; API lives under /api/"})
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.ui_dir, rel))
        root = os.path.realpath(self.ui_dir)
        if not full.startswith(root + os.sep) and full != root:
            self._send_json(404, {"error": "not found"})
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            self._send_json(404, {"error": "not found"})
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(
    port: int = 0,
    host: str = "127.0.0.1",
    store: SessionStore | None = None,
    trace_path: str | None = None,
    ui_dir: str | None = None,
    data_dir: str | None = None,
) -> ThreadingHTTPServer:
    """Build the HTTP server without starting it (tests drive it directly)."""
    if store is None:
        store = SessionStore(data_dir=data_dir)
    if trace_path:
        trace = tracefile.read_trace(trace_path)
        from .cli import _load_schedule_for
        from .replay import replay as _replay

        schedule = _load_schedule_for(trace_path, trace)
        outputs = None
        if schedule is not None:
            # replay once so the session can show the run's outputs
            _, outputs = _replay(schedule)
        store.add(trace, schedule, label="loaded from file", outputs=outputs)
    if ui_dir is None:
        guess = os.path.join(os.getcwd(), "frontend", "dist")
        if os.path.isdir(guess):
            ui_dir = guess

    api = _Api(store)

    class BoundHandler(Handler):
        pass

    BoundHandler.api = api
    BoundHandler.ui_dir = ui_dir
    server = ThreadingHTTPServer((host, port), BoundHandler)
    server.store = store
    return server


def serve(port: int, host: str = "127.0.0.1", trace_path: str | None = None,
          ui_dir: str | None = None, data_dir: str | None = None) -> None:
    server = make_server(port, host, trace_path=trace_path, ui_dir=ui_dir, data_dir=data_dir)
    addr = server.server_address
    print(f"serving on http://{addr[0]}:{addr[1]}/ (API under /api/)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
