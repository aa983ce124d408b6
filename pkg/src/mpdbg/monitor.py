"""Run observer: timestamps events, captures snapshots, assembles the trace.

The monitor never influences program behavior. It receives raw event
occurrences from the kernel (which carries distortion-free causal clocks)
and writes down timestamps distorted by an explicit overhead model:

    ts_enter = true_enter + clock_offset(process) + event_no * overhead
    ts_exit  = ts_enter + 1 + overhead

So the k-th event of a process carries k accumulated overhead charges plus
that process's constant skew, and its own overhead charge sits inside the
[ts_enter, ts_exit] interval. Post-mortem correction (see the graph module)
strips exactly these additions.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from typing import Any

from .arrays import ArraySnapshot
from .runtime import MessageId, RawEvent

# Event kinds. SEND/RECV/PROC_START/PROC_END are generated by the kernel on
# its own; the inspection kinds exist only where a program asked for them.
SEND = "SEND"
RECV = "RECV"
VAR_INSPECT = "VAR_INSPECT"
ARRAY_TRACE = "ARRAY_TRACE"
QUEUE_INSPECT = "QUEUE_INSPECT"
PROC_START = "PROC_START"
PROC_END = "PROC_END"

EVENT_KINDS = frozenset(
    {SEND, RECV, VAR_INSPECT, ARRAY_TRACE, QUEUE_INSPECT, PROC_START, PROC_END}
)
AUTOMATIC_KINDS = frozenset({SEND, RECV, PROC_START, PROC_END})
USER_KINDS = frozenset({VAR_INSPECT, ARRAY_TRACE, QUEUE_INSPECT})


@dataclass(frozen=True)
class OverheadModel:
    """Per-event monitor cost (ticks) and per-process constant clock skew."""

    per_event_overhead: int = 0
    per_process_clock_offset: dict[int, int] = field(default_factory=dict)

    def offset(self, process: int) -> int:
        return self.per_process_clock_offset.get(process, 0)

    def to_meta(self) -> dict:
        return {
            "per_event_overhead": self.per_event_overhead,
            "per_process_clock_offset": {
                str(k): v for k, v in sorted(self.per_process_clock_offset.items())
            },
        }

    @classmethod
    def from_meta(cls, obj: dict) -> "OverheadModel":
        return cls(
            per_event_overhead=int(obj.get("per_event_overhead", 0)),
            per_process_clock_offset={
                int(k): int(v)
                for k, v in obj.get("per_process_clock_offset", {}).items()
            },
        )


@dataclass
class Event:
    event_no: int
    process: int
    kind: str
    ts_enter: int
    ts_exit: int
    msg: MessageId | None = None
    peer: int | None = None
    tag: int | None = None
    length: int | None = None
    wildcard: bool | None = None
    filter_tag: int | None = None
    payload_ref: str | None = None
    source_loc: tuple[str, int] | None = None


@dataclass
class VarSnapshot:
    name: str
    value: Any


@dataclass
class QueueSnapshot:
    pending: list[MessageId]


@dataclass
class PendingArraySnapshot:
    """Array payload captured mid-run, before the event ref is known."""

    info: Any
    values: list


@dataclass
class Trace:
    """Recorded run: header metadata, per-process event lists, snapshots."""

    meta: dict
    events: dict[int, list[Event]]
    snapshots: dict[str, Any] = field(default_factory=dict)

    @property
    def world_size(self) -> int:
        return int(self.meta["world_size"])

    def iter_events(self):
        for rank in sorted(self.events):
            yield from self.events[rank]

    def event(self, process: int, event_no: int) -> Event | None:
        lst = self.events.get(process)
        if lst is None or not (0 <= event_no < len(lst)):
            return None
        ev = lst[event_no]
        assert ev.event_no == event_no
        return ev


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class Monitor:
    """Collects one run's events into a Trace. One instance per run."""

    def __init__(self, model: OverheadModel | None = None):
        self.model = model or OverheadModel()
        self.events: dict[int, list[Event]] = {}
        self.snapshots: dict[str, Any] = {}
        self._meta: dict | None = None
        self._next_snapshot = 0

    def begin_run(self, program: str, world_size: int, inputs: dict, policy_ref: dict) -> None:
        self.events = {r: [] for r in range(world_size)}
        self.snapshots = {}
        self._next_snapshot = 0
        self._meta = {
            "format": "mpdbg-trace-v1",
            "program": program,
            "world_size": world_size,
            "inputs": dict(inputs),
            "seed_or_schedule_ref": policy_ref,
            "overhead_model": self.model.to_meta(),
            "created_at": _utcnow(),
        }

    def _new_snapshot_id(self) -> str:
        sid = f"s{self._next_snapshot}"
        self._next_snapshot += 1
        return sid

    def on_runtime_event(self, raw: RawEvent) -> Event:
        delta = self.model.per_event_overhead
        ts_enter = raw.true_enter + self.model.offset(raw.process) + raw.event_no * delta
        ts_exit = ts_enter + 1 + delta
        payload_ref = None
        if raw.snapshot is not None:
            payload_ref = self._new_snapshot_id()
            snap = raw.snapshot
            if isinstance(snap, PendingArraySnapshot):
                snap = ArraySnapshot(
                    info=snap.info,
                    local_values=snap.values,
                    at_event=(raw.process, raw.event_no),
                )
            self.snapshots[payload_ref] = snap
        ev = Event(
            event_no=raw.event_no,
            process=raw.process,
            kind=raw.kind,
            ts_enter=ts_enter,
            ts_exit=ts_exit,
            msg=raw.msg,
            peer=raw.peer,
            tag=raw.tag,
            length=raw.length,
            wildcard=raw.wildcard,
            filter_tag=raw.filter_tag,
            payload_ref=payload_ref,
            source_loc=raw.source_loc,
        )
        lst = self.events.setdefault(raw.process, [])
        assert raw.event_no == len(lst), "event numbering must stay dense"
        lst.append(ev)
        return ev

    def trace(self) -> Trace:
        if self._meta is None:
            raise RuntimeError("monitor was never attached to a run")
        return Trace(meta=dict(self._meta), events=self.events, snapshots=self.snapshots)
