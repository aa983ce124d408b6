"""Analysis sessions: one loaded trace plus everything derived from it.

A session owns a trace, its event graph, the match schedule when one is
available, and lazily built caches (findings, corrected timeline, race
reports, exploration results). Manipulated replays produce new sessions so
caches never go stale; the store keeps the full history.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field

from . import analysis, arrays, graph as graphmod, tracefile
from .analysis import EXACT_REPLAY, HB_FILTER
from .errors import ToolError, UnknownEvent
from .graph import EventRef
from .monitor import Trace
from .replay import (
    ExecutionSet,
    Manipulation,
    MatchSchedule,
    explore_all,
    manipulate_and_replay,
    write_schedule,
)


def parse_event_ref(text: str) -> EventRef:
    """Parse the P:K event address used across CLI, API, and UI."""
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValueError(f"event address must look like P:K, got {text!r}")
    return EventRef(int(parts[0]), int(parts[1]))


@dataclass
class Session:
    id: str
    trace: Trace
    graph: graphmod.EventGraph
    schedule: MatchSchedule | None = None
    parent: str | None = None
    label: str = ""
    outputs: dict[int, bytes] | None = None
    _findings: list | None = field(default=None, repr=False)
    _corrected: graphmod.CorrectedTimeline | None = field(default=None, repr=False)
    _races: dict = field(default_factory=dict, repr=False)
    execution_set: ExecutionSet | None = None

    @classmethod
    def from_trace(cls, sid: str, trace: Trace, schedule: MatchSchedule | None = None,
                   parent: str | None = None, label: str = "",
                   outputs: dict[int, bytes] | None = None) -> "Session":
        return cls(
            id=sid, trace=trace, graph=graphmod.build_graph(trace),
            schedule=schedule, parent=parent, label=label, outputs=outputs,
        )

    @property
    def findings(self) -> list:
        if self._findings is None:
            self._findings = analysis.detect_errors(self.graph)
        return self._findings

    @property
    def corrected(self) -> graphmod.CorrectedTimeline:
        if self._corrected is None:
            self._corrected = graphmod.remove_overhead(self.trace, self.graph)
        return self._corrected

    def races(self, ref: EventRef, mode: str) -> analysis.RaceReport:
        key = (EventRef(*ref), mode)
        if key not in self._races:
            handle = self.schedule if mode == EXACT_REPLAY else None
            self._races[key] = analysis.racing_messages(self.graph, ref, mode, handle)
        return self._races[key]

    def wildcard_summary(self) -> list[dict]:
        out = []
        for ref in analysis.find_wildcard_receives(self.graph):
            mode = EXACT_REPLAY if self.schedule is not None else HB_FILTER
            report = self.races(ref, mode)
            obs = report.observed
            out.append({
                "event": {"process": ref.process, "event_no": ref.event_no},
                "candidate_count": len(report.candidates),
                "observed": (
                    {"sender": obs.sender, "seq": obs.seq} if obs is not None else None
                ),
            })
        return out

    def array_collections(self) -> dict[str, list[arrays.ArraySnapshot]]:
        """Latest snapshot per rank for every collection id in the trace."""
        groups: dict[str, dict[int, arrays.ArraySnapshot]] = {}
        for sid in sorted(self.trace.snapshots, key=lambda s: (len(s), s)):
            snap = self.trace.snapshots[sid]
            if isinstance(snap, arrays.ArraySnapshot):
                per_rank = groups.setdefault(snap.info.collection_id, {})
                per_rank[snap.info.owner_rank] = snap
        return {cid: [per[r] for r in sorted(per)] for cid, per in groups.items()}


def build_report(session: Session) -> dict:
    """Deterministic analysis summary for one trace."""
    g = session.graph
    raw = graphmod.raw_timeline(session.trace)
    raw_violations = graphmod.timeline_violations(raw, g)
    corrected = session.corrected
    corrected_violations = graphmod.timeline_violations(corrected, g)
    counts = {str(r): len(session.trace.events.get(r, [])) for r in sorted(session.trace.events)}
    return {
        "program": session.trace.meta.get("program"),
        "world_size": session.trace.world_size,
        "event_counts": counts,
        "findings": [f.to_json_obj() for f in session.findings],
        "wildcard_receives": session.wildcard_summary(),
        "corrected_timeline": {
            "epsilon": corrected.epsilon,
            "raw_causality_violations": len(raw_violations),
            "corrected_causality_violations": len(corrected_violations),
        },
        "array_collections": sorted(session.array_collections()),
    }


class SessionStore:
    """All sessions of one service instance; thread-safe.

    Reads share immutable session data; manipulations and explorations are
    serialized by the store lock. When a data directory is configured
    (MADPG_DATA_DIR or explicit argument), every new session's trace and
    schedule are persisted there.
    """

    def __init__(self, data_dir: str | None = None):
        self._lock = threading.RLock()
        self._sessions: dict[str, Session] = {}
        self._order: list[str] = []
        self.active_id: str | None = None
        self._next = 1
        self.data_dir = data_dir if data_dir is not None else os.environ.get("MADPG_DATA_DIR")

    def _new_id(self) -> str:
        sid = f"s{self._next}"
        self._next += 1
        return sid

    def _persist(self, session: Session) -> None:
        if not self.data_dir:
            return
        os.makedirs(self.data_dir, exist_ok=True)
        tracefile.write_trace(session.trace, os.path.join(self.data_dir, f"{session.id}.jsonl"))
        if session.schedule is not None:
            write_schedule(
                session.schedule, os.path.join(self.data_dir, f"{session.id}.schedule.json")
            )

    def add(self, trace: Trace, schedule: MatchSchedule | None = None,
            parent: str | None = None, label: str = "",
            outputs: dict[int, bytes] | None = None) -> Session:
        with self._lock:
            sid = self._new_id()
            session = Session.from_trace(sid, trace, schedule, parent, label, outputs)
            self._sessions[sid] = session
            self._order.append(sid)
            self.active_id = sid
            self._persist(session)
            return session

    def get(self, sid: str | None = None) -> Session:
        with self._lock:
            key = sid or self.active_id
            if key is None or key not in self._sessions:
                raise UnknownEvent(f"session {key!r}")
            return self._sessions[key]

    def history(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "id": s.id,
                    "parent": self._sessions[s.id].parent,
                    "label": self._sessions[s.id].label,
                    "active": s.id == self.active_id,
                }
                for s in (self._sessions[i] for i in self._order)
            ]

    def manipulate(self, sid: str | None, at: EventRef, force, suffix_seed: int) -> Session:
        with self._lock:
            base = self.get(sid)
            if base.schedule is None:
                raise ToolError("session has no schedule; manipulation unavailable")
            trace, outputs, schedule = manipulate_and_replay(
                base.schedule,
                Manipulation(at=(at.process, at.event_no), force=force),
                suffix_seed=suffix_seed,
            )
            label = f"force {force.sender}:{force.seq} at {at.process}:{at.event_no}"
            return self.add(trace, schedule, parent=base.id, label=label, outputs=outputs)

    def explore(self, sid: str | None, max_executions: int, max_depth: int) -> ExecutionSet:
        with self._lock:
            base = self.get(sid)
            if base.schedule is None:
                raise ToolError("session has no schedule; exploration unavailable")
            meta = base.schedule.meta
            es = explore_all(
                meta["program"], int(meta["world_size"]), meta.get("inputs", {}),
                initial=base.schedule,
                max_executions=max_executions, max_depth=max_depth,
            )
            base.execution_set = es
            return es
