"""Trace analysis: communication-error findings, event info, consistent-cut
breakpoints, and racing-message evaluation at wildcard receives.

Race evaluation has two modes. HB_FILTER is a fast over-approximation on
the recorded graph: a message is a candidate if it targets the receiver
with a matching tag, is not causally downstream of the receive, was not
consumed earlier on the receiving process, and is not shadowed by an
older undelivered message from the same sender (FIFO). EXACT_REPLAY is
ground truth: it replays the schedule prefix strictly before the receive
and explores every enabled continuation, collecting what the receive can
actually accept. EXACT_REPLAY is always a subset of HB_FILTER.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NotWildcard, ReplayUnavailable, UnknownEvent
from .graph import EventGraph, EventRef, happens_before
from .monitor import RECV, SEND
from .runtime import ANY_TAG, MessageId

ISOLATED_SEND = "ISOLATED_SEND"
ISOLATED_RECV = "ISOLATED_RECV"
LENGTH_MISMATCH = "LENGTH_MISMATCH"

HB_FILTER = "HB_FILTER"
EXACT_REPLAY = "EXACT_REPLAY"


@dataclass(frozen=True)
class Finding:
    kind: str
    events: tuple[EventRef, ...]
    detail: str

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "events": [{"process": e.process, "event_no": e.event_no} for e in self.events],
            "detail": self.detail,
        }


@dataclass(frozen=True)
class BreakpointCut:
    anchor: EventRef
    stop_after: dict[int, int]

    def to_json_obj(self) -> dict:
        return {
            "anchor": {"process": self.anchor.process, "event_no": self.anchor.event_no},
            "stop_after": {str(k): v for k, v in sorted(self.stop_after.items())},
        }


@dataclass
class RaceReport:
    recv: EventRef
    observed: MessageId | None
    candidates: list[MessageId]
    method: str

    def to_json_obj(self) -> dict:
        return {
            "recv": {"process": self.recv.process, "event_no": self.recv.event_no},
            "observed": (
                {"sender": self.observed.sender, "seq": self.observed.seq}
                if self.observed is not None else None
            ),
            "candidates": [{"sender": m.sender, "seq": m.seq} for m in self.candidates],
            "method": self.method,
        }


@dataclass
class InfoRecord:
    ref: EventRef
    kind: str
    peer: int | None
    tag: int | None
    length: int | None
    wildcard: bool | None
    candidate_count: int | None
    source_loc: tuple[str, int] | None
    vector_clock: tuple[int, ...]
    msg: MessageId | None = None
    snapshot: object = None

    def to_json_obj(self) -> dict:
        return {
            "event": {"process": self.ref.process, "event_no": self.ref.event_no},
            "kind": self.kind,
            "peer": self.peer,
            "tag": self.tag,
            "length": self.length,
            "wildcard": self.wildcard,
            "candidate_count": self.candidate_count,
            "source_loc": list(self.source_loc) if self.source_loc else None,
            "vector_clock": list(self.vector_clock),
            "msg": (
                {"sender": self.msg.sender, "seq": self.msg.seq}
                if self.msg is not None else None
            ),
        }


def detect_errors(g: EventGraph) -> list[Finding]:
    """Isolated sends/receives and sender/receiver length disagreements."""
    findings: list[Finding] = []
    received = {ev.msg for ev in g.trace.iter_events() if ev.kind == RECV and ev.msg}
    for ev in g.trace.iter_events():
        if ev.kind == SEND and ev.msg is not None and ev.msg not in received:
            ref = EventRef(ev.process, ev.event_no)
            findings.append(Finding(
                ISOLATED_SEND, (ref,),
                f"message {ev.msg.sender}:{ev.msg.seq} to rank {ev.peer} is never received",
            ))
    for ref in g.dangling_receives:
        ev = g.by_ref[ref]
        findings.append(Finding(
            ISOLATED_RECV, (ref,),
            f"receive names message {ev.msg.sender}:{ev.msg.seq} but no such send exists",
        ))
    for recv_ref, send_ref in g.message_edge.items():
        send_ev = g.by_ref[send_ref]
        recv_ev = g.by_ref[recv_ref]
        if send_ev.length != recv_ev.length:
            findings.append(Finding(
                LENGTH_MISMATCH, (send_ref, recv_ref),
                f"send length {send_ev.length} != recv length {recv_ev.length}",
            ))
    findings.sort(key=lambda f: (f.events[0], f.kind))
    return findings


def find_wildcard_receives(g: EventGraph) -> list[EventRef]:
    out = [
        EventRef(ev.process, ev.event_no)
        for ev in g.trace.iter_events()
        if ev.kind == RECV and ev.wildcard
    ]
    out.sort()
    return out


def compute_breakpoint(g: EventGraph, anchor: EventRef) -> BreakpointCut:
    """Minimal consistent cut containing the anchor: its causal past.

    Component q of the anchor's vector clock counts the events of process q
    inside that past, so stop_after[q] is exactly that count minus one.
    """
    anchor = EventRef(*anchor)
    g.resolve(anchor)
    clock = g.clocks[anchor]
    stop_after = {q: clock[q] - 1 for q in range(g.world_size)}
    return BreakpointCut(anchor=anchor, stop_after=stop_after)


def _rigidly_after(g: EventGraph, start: EventRef, target: EventRef) -> bool:
    """True when target is downstream of start along edges whose existence
    cannot change with a different match at a wildcard receive: program
    order and message edges into explicit-source receives. Paths through
    wildcard match edges are ignored because those matches are exactly what
    alternative executions may rewire."""
    if start == target:
        return False
    seen = {start}
    stack = [start]
    while stack:
        ref = stack.pop()
        succs = []
        nxt = EventRef(ref.process, ref.event_no + 1)
        if nxt in g.by_ref:
            succs.append(nxt)
        ev = g.by_ref[ref]
        if ev.kind == SEND and ev.msg is not None:
            for recv_ref in g.recvs_of_msg.get(ev.msg, ()):
                if not g.by_ref[recv_ref].wildcard:
                    succs.append(recv_ref)
        for s in succs:
            if s == target:
                return True
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return False


def _hb_candidates(g: EventGraph, recv_ref: EventRef) -> list[MessageId]:
    recv_ev = g.by_ref[recv_ref]
    p = recv_ref.process
    ftag = recv_ev.filter_tag if recv_ev.filter_tag is not None else recv_ev.tag
    consumed_before = {
        e.msg for e in g.events_of(p)
        if e.kind == RECV and e.event_no < recv_ref.event_no and e.msg is not None
    }
    sends = [ev for ev in g.trace.iter_events() if ev.kind == SEND and ev.msg is not None]
    unconsumed = {
        s.msg for s in sends if s.peer == p and s.msg not in consumed_before
    }
    out: set[MessageId] = set()
    if recv_ev.msg is not None:
        out.add(recv_ev.msg)
    for s in sends:
        m = s.msg
        if s.peer != p or m in consumed_before:
            continue
        if ftag is not None and ftag != ANY_TAG and s.tag != ftag:
            continue
        shadowed = any(
            other.sender == m.sender and other.seq < m.seq
            for other in unconsumed
        )
        if shadowed:
            continue
        send_ref = EventRef(s.process, s.event_no)
        if _rigidly_after(g, recv_ref, send_ref):
            continue
        out.add(m)
    return sorted(out)


def racing_messages(
    g: EventGraph,
    recv: EventRef,
    mode: str = HB_FILTER,
    replay=None,
) -> RaceReport:
    """Which messages could the given wildcard receive have accepted.

    ``replay`` must be the match schedule of the recorded run when mode is
    EXACT_REPLAY; the schedule prefix strictly before the receive is pinned
    and every continuation is explored.
    """
    recv = EventRef(*recv)
    ev = g.resolve(recv)
    if ev.kind != RECV or not ev.wildcard:
        raise NotWildcard(recv)
    if mode == HB_FILTER:
        cands = _hb_candidates(g, recv)
        return RaceReport(recv=recv, observed=ev.msg, candidates=cands, method=HB_FILTER)
    if mode != EXACT_REPLAY:
        raise ValueError(f"unknown race mode {mode!r}")
    if replay is None:
        raise ReplayUnavailable("EXACT_REPLAY needs the recorded match schedule")
    from .replay import exact_candidates

    cands = sorted(exact_candidates(replay, recv))
    if ev.msg is not None and ev.msg not in cands:
        cands = sorted(set(cands) | {ev.msg})
    return RaceReport(recv=recv, observed=ev.msg, candidates=cands, method=EXACT_REPLAY)


def event_info(g: EventGraph, e: EventRef, replay=None) -> InfoRecord:
    """Everything the inspector shows for one event; wildcard receives also
    get their racing-candidate count (HB filter unless a schedule is given)."""
    e = EventRef(*e)
    ev = g.resolve(e)
    candidate_count = None
    if ev.kind == RECV and ev.wildcard:
        mode = EXACT_REPLAY if replay is not None else HB_FILTER
        candidate_count = len(racing_messages(g, e, mode, replay).candidates)
    snapshot = None
    if ev.payload_ref is not None:
        snapshot = g.trace.snapshots.get(ev.payload_ref)
    return InfoRecord(
        ref=e,
        kind=ev.kind,
        peer=ev.peer,
        tag=ev.tag,
        length=ev.length,
        wildcard=ev.wildcard,
        candidate_count=candidate_count,
        source_loc=ev.source_loc,
        vector_clock=g.clocks[e],
        msg=ev.msg,
        snapshot=snapshot,
    )
