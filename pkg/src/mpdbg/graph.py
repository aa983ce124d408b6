"""Event graph: happens-before structure and post-mortem timeline repair.

The graph over a trace has one node per event, program-order edges
(p,k) -> (p,k+1), and one message edge per receive that names a recorded
send. Vector clocks are computed in a single forward pass over a
deterministic topological order; component p of an event's clock equals
the number of events of process p inside its causal history (itself
included), so ``a`` happens before ``b`` iff ``a != b`` and
``clock(a) <= clock(b)`` componentwise.

Timeline correction runs in three phases. Phase 1 subtracts each process's
constant clock offset. Phase 2 removes accumulated monitor overhead: the
k-th event of a process moves back by k*overhead and its exit becomes
enter + 1 (the intrinsic event cost). Phase 3 repairs any remaining
causality violations: walking events in topological order, a receive that
now starts before its send's exit plus epsilon is moved up to exactly that
point and the rest of its process shifts forward by the same amount.
Shifts only move events later, so one pass leaves no violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import CyclicTrace, UnknownEvent
from .monitor import Event, OverheadModel, Trace
from .runtime import MESSAGE_LATENCY, MessageId


class EventRef(NamedTuple):
    process: int
    event_no: int


@dataclass
class EventGraph:
    trace: Trace
    world_size: int
    by_ref: dict[EventRef, Event]
    message_edge: dict[EventRef, EventRef]        # recv -> send
    send_of_msg: dict[MessageId, EventRef]
    recvs_of_msg: dict[MessageId, list[EventRef]]
    dangling_receives: list[EventRef]
    clocks: dict[EventRef, tuple[int, ...]]
    topo_order: list[EventRef]

    def resolve(self, ref: EventRef) -> Event:
        ev = self.by_ref.get(EventRef(*ref))
        if ev is None:
            raise UnknownEvent(ref)
        return ev

    def events_of(self, process: int) -> list[Event]:
        return self.trace.events.get(process, [])


def build_graph(trace: Trace) -> EventGraph:
    """Construct edges and vector clocks; dangling receives are reported,
    not fatal, so doctored traces remain analyzable."""
    world_size = trace.world_size
    by_ref: dict[EventRef, Event] = {}
    send_of_msg: dict[MessageId, EventRef] = {}
    recvs_of_msg: dict[MessageId, list[EventRef]] = {}
    for ev in trace.iter_events():
        ref = EventRef(ev.process, ev.event_no)
        by_ref[ref] = ev
        if ev.kind == "SEND" and ev.msg is not None:
            if ev.msg in send_of_msg:
                raise ValueError(f"corrupt trace: message {ev.msg} sent twice")
            send_of_msg[ev.msg] = ref
    message_edge: dict[EventRef, EventRef] = {}
    dangling: list[EventRef] = []
    for ev in trace.iter_events():
        if ev.kind != "RECV" or ev.msg is None:
            continue
        ref = EventRef(ev.process, ev.event_no)
        send_ref = send_of_msg.get(ev.msg)
        if send_ref is None:
            dangling.append(ref)
        else:
            message_edge[ref] = send_ref
            recvs_of_msg.setdefault(ev.msg, []).append(ref)
    dangling.sort()

    # One forward pass in a deterministic topological order. A process's
    # next event is ready once its predecessor and (for receives) the
    # matching send have been visited.
    counts = {r: len(trace.events.get(r, [])) for r in trace.events}
    pointer = {r: 0 for r in counts}
    ranks = sorted(counts)
    clocks: dict[EventRef, tuple[int, ...]] = {}
    topo: list[EventRef] = []
    zeros = (0,) * world_size
    remaining = sum(counts.values())
    while remaining:
        advanced = False
        for r in ranks:
            while pointer[r] < counts[r]:
                ref = EventRef(r, pointer[r])
                dep = message_edge.get(ref)
                if dep is not None and dep not in clocks:
                    break
                prev = clocks[EventRef(r, pointer[r] - 1)] if pointer[r] else zeros
                if dep is not None:
                    other = clocks[dep]
                    merged = tuple(max(a, b) for a, b in zip(prev, other))
                else:
                    merged = prev
                comp = list(merged)
                if r < world_size:
                    comp[r] += 1
                clocks[ref] = tuple(comp)
                topo.append(ref)
                pointer[r] += 1
                remaining -= 1
                advanced = True
        if not advanced:
            raise CyclicTrace("program-order and message edges form a cycle")

    return EventGraph(
        trace=trace,
        world_size=world_size,
        by_ref=by_ref,
        message_edge=message_edge,
        send_of_msg=send_of_msg,
        recvs_of_msg=recvs_of_msg,
        dangling_receives=dangling,
        clocks=clocks,
        topo_order=topo,
    )


def happens_before(g: EventGraph, a: EventRef, b: EventRef) -> bool:
    a = EventRef(*a)
    b = EventRef(*b)
    g.resolve(a)
    g.resolve(b)
    if a == b:
        return False
    ca = g.clocks[a]
    cb = g.clocks[b]
    return all(x <= y for x, y in zip(ca, cb))


def concurrent(g: EventGraph, a: EventRef, b: EventRef) -> bool:
    return a != b and not happens_before(g, a, b) and not happens_before(g, b, a)


@dataclass
class CorrectedTimeline:
    adjusted: dict[EventRef, tuple[int, int]]
    epsilon: int = MESSAGE_LATENCY

    def enter(self, ref: EventRef) -> int:
        return self.adjusted[EventRef(*ref)][0]

    def exit(self, ref: EventRef) -> int:
        return self.adjusted[EventRef(*ref)][1]


def raw_timeline(trace: Trace) -> CorrectedTimeline:
    adjusted = {
        EventRef(ev.process, ev.event_no): (ev.ts_enter, ev.ts_exit)
        for ev in trace.iter_events()
    }
    return CorrectedTimeline(adjusted=adjusted)


def remove_overhead(
    trace: Trace,
    g: EventGraph | None = None,
    epsilon: int = MESSAGE_LATENCY,
) -> CorrectedTimeline:
    """Strip skew and monitor overhead, then repair causality (all 3 phases)."""
    model = OverheadModel.from_meta(trace.meta.get("overhead_model", {}))
    delta = model.per_event_overhead
    adjusted: dict[EventRef, tuple[int, int]] = {}
    for ev in trace.iter_events():
        enter = ev.ts_enter - model.offset(ev.process) - ev.event_no * delta
        adjusted[EventRef(ev.process, ev.event_no)] = (enter, enter + 1)
    timeline = CorrectedTimeline(adjusted=adjusted, epsilon=epsilon)
    if g is None:
        g = build_graph(trace)
    return synchronize_clocks(timeline, g)


def synchronize_clocks(timeline: CorrectedTimeline, g: EventGraph) -> CorrectedTimeline:
    """Enforce recv_enter >= send_exit + epsilon on every message edge.

    Idempotent; a timeline without violations passes through unchanged.
    """
    eps = timeline.epsilon
    shift: dict[int, int] = {}
    out: dict[EventRef, tuple[int, int]] = {}
    for ref in g.topo_order:
        enter, exit_ = timeline.adjusted[ref]
        s = shift.get(ref.process, 0)
        enter += s
        exit_ += s
        dep = g.message_edge.get(ref)
        if dep is not None:
            floor = out[dep][1] + eps
            if enter < floor:
                extra = floor - enter
                shift[ref.process] = s + extra
                enter += extra
                exit_ += extra
        out[ref] = (enter, exit_)
    return CorrectedTimeline(adjusted=out, epsilon=eps)


def timeline_violations(timeline: CorrectedTimeline, g: EventGraph) -> list[tuple[EventRef, EventRef]]:
    """Message edges (send, recv) where the recv starts too early."""
    bad = []
    for recv_ref, send_ref in sorted(g.message_edge.items()):
        if timeline.enter(recv_ref) < timeline.exit(send_ref) + timeline.epsilon:
            bad.append((send_ref, recv_ref))
    return bad
