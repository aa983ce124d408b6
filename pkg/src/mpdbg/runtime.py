"""Deterministic simulated message-passing kernel.

Programs run as cooperative generator processes under a single scheduler.
A process talks to the kernel by yielding request objects built by its
:class:`ProcContext` (``mid = yield ctx.send(...)``, ``env = yield
ctx.recv(...)``). Sends are buffered and non-blocking; receives block until
the scheduler delivers a matching envelope. Channels between a fixed
(sender, dest) pair are FIFO: only the oldest undelivered envelope of a
channel is ever deliverable.

Match determinism
-----------------
Receives with an explicit source have at most one deliverable envelope
(the channel head) and are resolved automatically. Wildcard receives
(``source=ANY_SOURCE``) are resolved by a pluggable driver once the system
quiesces, i.e. when no process can take another step. Under the seeded
policy the driver picks index ``next_prng_value % k`` among the k
deliverable candidates sorted by (sender, seq). The PRNG is a 64-bit
linear congruential generator (Knuth's MMIX constants, multiplier
6364136223846793005, increment 1442695040888963407) whose output is the
top 31 bits of the state. Identical (program, world_size, inputs, seed)
therefore yields an identical run.

Simulated time
--------------
Each process owns a logical clock that starts at 0 and advances by one
tick per event. Delivering an envelope first lifts the receiver's clock to
``send_exit + MESSAGE_LATENCY`` so true timestamps are always causal.
Monitor overhead and clock skew are recording distortions applied by the
monitor, never by the kernel, so they cannot change program behavior.
"""

from __future__ import annotations

import inspect
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import (
    DeadlockError,
    InvalidDest,
    ProgramError,
    ScheduleInfeasible,
    ToolError,
    UnknownProgram,
)

ANY_SOURCE = -1
ANY_TAG = -1

#: Ticks an envelope spends in flight; floor for recv_enter - send_exit.
MESSAGE_LATENCY = 1

_MASK64 = (1 << 64) - 1
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407


class MatchPrng:
    """Seeded LCG used only to pick among racing receive candidates."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def pick(self, k: int) -> int:
        if k < 2:
            return 0
        self._state = (_LCG_MULT * self._state + _LCG_INC) & _MASK64
        return (self._state >> 33) % k


# --------------------------------------------------------------------------
# Value types
# --------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class MessageId:
    sender: int
    seq: int


@dataclass(frozen=True)
class Envelope:
    id: MessageId
    dest: int
    tag: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class RecvFilter:
    source: int
    tag: int

    @property
    def wildcard(self) -> bool:
        return self.source == ANY_SOURCE

    def admits(self, env: Envelope) -> bool:
        if self.source != ANY_SOURCE and env.id.sender != self.source:
            return False
        return self.tag == ANY_TAG or env.tag == self.tag


@dataclass(frozen=True)
class Decision:
    """One receive-match decision: which message event (process, recv_event_no) took."""

    process: int
    recv_event_no: int
    msg: MessageId


# Event kind tokens shared with the monitor.
SEND = "SEND"
RECV = "RECV"
VAR_INSPECT = "VAR_INSPECT"
ARRAY_TRACE = "ARRAY_TRACE"
QUEUE_INSPECT = "QUEUE_INSPECT"
PROC_START = "PROC_START"
PROC_END = "PROC_END"


@dataclass(frozen=True)
class RawEvent:
    """Kernel-side record of one event occurrence, before monitor timestamps."""

    process: int
    event_no: int
    kind: str
    true_enter: int
    msg: MessageId | None = None
    peer: int | None = None
    tag: int | None = None
    length: int | None = None
    wildcard: bool | None = None
    filter_tag: int | None = None
    source_loc: tuple[str, int] | None = None
    snapshot: Any = None


# --------------------------------------------------------------------------
# Program registry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProgramSpec:
    name: str
    fn: Callable
    world_sizes: frozenset[int]
    description: str = ""
    default_inputs: dict[str, str] = field(default_factory=dict)


_REGISTRY: dict[str, ProgramSpec] = {}


def register_program(spec: ProgramSpec) -> ProgramSpec:
    if not inspect.isgeneratorfunction(spec.fn):
        raise ValueError(f"program {spec.name!r} must be a generator function")
    _REGISTRY[spec.name] = spec
    return spec


def get_program(name: str) -> ProgramSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownProgram(name) from None


def registered_programs() -> list[ProgramSpec]:
    return sorted(_REGISTRY.values(), key=lambda s: s.name)


# --------------------------------------------------------------------------
# Process context (program-facing API)
# --------------------------------------------------------------------------

class _SendReq:
    __slots__ = ("dest", "tag", "payload", "source_loc")

    def __init__(self, dest, tag, payload, source_loc):
        self.dest = dest
        self.tag = tag
        self.payload = payload
        self.source_loc = source_loc


class _RecvReq:
    __slots__ = ("filter", "source_loc")

    def __init__(self, flt, source_loc):
        self.filter = flt
        self.source_loc = source_loc


class _VarReq:
    __slots__ = ("name", "value", "source_loc")

    def __init__(self, name, value, source_loc):
        self.name = name
        self.value = value
        self.source_loc = source_loc


class _ArrayReq:
    __slots__ = ("values", "info", "source_loc")

    def __init__(self, values, info, source_loc):
        self.values = values
        self.info = info
        self.source_loc = source_loc


class _QueueReq:
    __slots__ = ("source_loc",)

    def __init__(self, source_loc):
        self.source_loc = source_loc


def _caller_loc() -> tuple[str, int]:
    frame = sys._getframe(2)
    name = frame.f_code.co_filename.rsplit("/", 1)[-1]
    return (name, frame.f_lineno)


class ProcContext:
    """Handle a program body uses to interact with the kernel.

    All event-producing calls return request objects that must be yielded;
    the kernel performs the action and sends the result back into the
    generator. ``output`` is not an event and takes effect immediately.
    """

    def __init__(self, kernel: "Kernel", rank: int):
        self._kernel = kernel
        self.rank = rank
        self.world_size = kernel.world_size
        self.inputs = kernel.inputs

    def send(self, dest: int, tag: int, payload: bytes) -> _SendReq:
        if not (0 <= dest < self.world_size):
            raise InvalidDest(dest, self.world_size)
        if tag < 0:
            raise ValueError("tag must be >= 0")
        if not isinstance(payload, (bytes, bytearray)):
            raise TypeError("payload must be bytes")
        return _SendReq(dest, tag, bytes(payload), _caller_loc())

    def recv(self, source: int, tag: int) -> _RecvReq:
        if source != ANY_SOURCE and not (0 <= source < self.world_size):
            raise ValueError(f"recv source {source} outside world")
        if tag != ANY_TAG and tag < 0:
            raise ValueError("tag must be >= 0 or ANY_TAG")
        return _RecvReq(RecvFilter(source, tag), _caller_loc())

    def trace_var(self, name: str, value) -> _VarReq:
        return _VarReq(name, value, _caller_loc())

    def trace_array(self, values, info) -> _ArrayReq:
        return _ArrayReq(list(values), info, _caller_loc())

    def inspect_queue(self) -> _QueueReq:
        return _QueueReq(_caller_loc())

    def output(self, data: bytes) -> None:
        self._kernel._append_output(self.rank, bytes(data))


# --------------------------------------------------------------------------
# Drivers: pluggable wildcard-match policies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChoiceOption:
    """A wildcard receive that is currently deliverable."""

    process: int
    recv_event_no: int
    candidates: tuple[MessageId, ...]


class SeededDriver:
    """Resolve the lowest blocked rank, picking among candidates by PRNG."""

    def __init__(self, seed: int):
        self.seed = seed
        self._prng = MatchPrng(seed)

    def on_delivery(self, decision: Decision, wildcard: bool) -> None:
        pass

    def choose(self, options: dict[int, ChoiceOption]) -> tuple[int, MessageId] | None:
        rank = min(options)
        opt = options[rank]
        idx = self._prng.pick(len(opt.candidates))
        return rank, opt.candidates[idx]


class ScriptedDriver:
    """Force every receive to match exactly as a recorded schedule says.

    A receive without a decision (truncated schedule) and a decision whose
    message can never be delivered are both hard errors; replay must be
    unambiguous.
    """

    def __init__(self, decisions: list[Decision]):
        self._queues: dict[int, deque[Decision]] = {}
        self._pos: dict[Decision, int] = {}
        for i, d in enumerate(decisions):
            self._queues.setdefault(d.process, deque()).append(d)
            self._pos[d] = i
        self.strict = True

    def _queue(self, rank: int) -> deque[Decision]:
        return self._queues.setdefault(rank, deque())

    def on_delivery(self, decision: Decision, wildcard: bool) -> None:
        q = self._queue(decision.process)
        if q and q[0].recv_event_no == decision.recv_event_no:
            expected = q[0]
            if expected.msg != decision.msg:
                raise ScheduleInfeasible(
                    expected, f"delivered {decision.msg} instead of scheduled message"
                )
            q.popleft()
            return
        if self.strict:
            raise ScheduleInfeasible(
                decision, "receive has no matching decision (truncated schedule)"
            )

    def _servable(self, options: dict[int, ChoiceOption]) -> tuple[int, MessageId] | None:
        for rank in sorted(options):
            q = self._queue(rank)
            if not q:
                continue
            head = q[0]
            opt = options[rank]
            if head.recv_event_no != opt.recv_event_no:
                if self.strict:
                    raise ScheduleInfeasible(
                        head,
                        f"next receive of rank {rank} is event "
                        f"{opt.recv_event_no}, schedule expects {head.recv_event_no}",
                    )
                continue
            if head.msg in opt.candidates:
                return rank, head.msg
        return None

    def _first_pending(self, options: dict[int, ChoiceOption]) -> Decision | None:
        pending = [self._queue(r)[0] for r in options if self._queue(r)]
        if not pending:
            return None
        return min(pending, key=lambda d: self._pos.get(d, 1 << 30))

    def choose(self, options: dict[int, ChoiceOption]) -> tuple[int, MessageId] | None:
        pick = self._servable(options)
        if pick is not None:
            return pick
        stuck = self._first_pending(options)
        if stuck is not None:
            raise ScheduleInfeasible(stuck, "scheduled message is not deliverable")
        raise ScheduleInfeasible(None, "receive has no decision (truncated schedule)")

    def leftovers(self) -> list[Decision]:
        return [d for q in self._queues.values() for d in q]


class SchedulerPolicy:
    """Wrapper matching the two public policies: seeded or scripted."""

    def __init__(self, kind: str, seed: int | None = None, decisions=None):
        self.kind = kind
        self.seed = seed
        self.decisions = decisions

    @classmethod
    def seeded(cls, seed: int) -> "SchedulerPolicy":
        return cls("SEEDED", seed=seed)

    @classmethod
    def scripted(cls, schedule) -> "SchedulerPolicy":
        decisions = getattr(schedule, "decisions", schedule)
        return cls("SCRIPTED", decisions=list(decisions))

    def make_driver(self):
        if self.kind == "SEEDED":
            return SeededDriver(self.seed)
        return ScriptedDriver(self.decisions)

    def ref(self) -> dict:
        if self.kind == "SEEDED":
            return {"kind": "seed", "seed": self.seed}
        return {"kind": "schedule", "decisions": len(self.decisions)}


# --------------------------------------------------------------------------
# Kernel
# --------------------------------------------------------------------------

_READY = "ready"
_BLOCKED = "blocked"
_DONE = "done"
_HALTED = "halted"


class _Proc:
    __slots__ = (
        "rank", "gen", "started", "state", "flt", "recv_loc",
        "reply", "events", "clock",
    )

    def __init__(self, rank: int):
        self.rank = rank
        self.gen = None
        self.started = False
        self.state = _READY
        self.flt: RecvFilter | None = None
        self.recv_loc: tuple[str, int] | None = None
        self.reply = None
        self.events = 0
        self.clock = 0


class _InFlight:
    __slots__ = ("env", "send_exit")

    def __init__(self, env: Envelope, send_exit: int):
        self.env = env
        self.send_exit = send_exit


@dataclass
class RunResult:
    outputs: dict[int, bytes]
    status: str
    decisions: list[Decision]


@dataclass
class Outcome:
    """Internal run result, richer than the public RunResult."""

    status: str  # "done" or "stopped"
    outputs: dict[int, bytes]
    decisions: list[Decision]
    options: dict[int, ChoiceOption] | None
    kernel: "Kernel"


class Kernel:
    """One simulated run: processes, channels, clocks, event numbering."""

    def __init__(
        self,
        spec: ProgramSpec,
        world_size: int,
        inputs: dict[str, str],
        monitor=None,
        caps: dict[int, int] | None = None,
    ):
        if world_size not in spec.world_sizes:
            raise ValueError(
                f"program {spec.name!r} supports world sizes "
                f"{sorted(spec.world_sizes)}, not {world_size}"
            )
        self.spec = spec
        self.world_size = world_size
        self.inputs = dict(inputs)
        self.monitor = monitor
        self.caps = dict(caps) if caps is not None else None
        self.procs = [_Proc(r) for r in range(world_size)]
        self.channels: dict[tuple[int, int], deque[_InFlight]] = {}
        self.send_seq = [0] * world_size
        self.deliveries: list[Decision] = []
        self.outputs: dict[int, bytearray] = {r: bytearray() for r in range(world_size)}
        self._driver = None
        if self.caps is not None:
            for p in self.procs:
                if self.caps.get(p.rank, 0) <= 0:
                    p.state = _HALTED

    # -- helpers ------------------------------------------------------------

    def _append_output(self, rank: int, data: bytes) -> None:
        self.outputs[rank].extend(data)

    def _at_cap(self, proc: _Proc) -> bool:
        return self.caps is not None and proc.events >= self.caps.get(proc.rank, 0)

    def _emit(self, proc: _Proc, kind: str, **fields) -> bool:
        """Record one event; returns False (and halts the process) at its cap."""
        if self._at_cap(proc):
            proc.state = _HALTED
            return False
        raw = RawEvent(
            process=proc.rank,
            event_no=proc.events,
            kind=kind,
            true_enter=proc.clock,
            **fields,
        )
        proc.events += 1
        proc.clock += 1
        if self.monitor is not None:
            self.monitor.on_runtime_event(raw)
        return True

    def pending_for(self, rank: int) -> list[_InFlight]:
        out = []
        for (s, d), ch in self.channels.items():
            if d == rank:
                out.extend(ch)
        out.sort(key=lambda f: (f.env.id.sender, f.env.id.seq))
        return out

    # -- stepping -----------------------------------------------------------

    def _start(self, proc: _Proc) -> None:
        proc.started = True
        if not self._emit(proc, PROC_START):
            return
        ctx = ProcContext(self, proc.rank)
        proc.gen = self.spec.fn(ctx)
        if not inspect.isgenerator(proc.gen):
            raise ProgramError(proc.rank, TypeError("program did not return a generator"))

    def _run_proc(self, proc: _Proc) -> None:
        """Advance one process until it blocks, finishes, or hits its cap."""
        if not proc.started:
            self._start(proc)
            if proc.state != _READY:
                return
        while proc.state == _READY:
            reply, proc.reply = proc.reply, None
            try:
                req = proc.gen.send(reply)
            except StopIteration:
                self._emit(proc, PROC_END)
                if proc.state != _HALTED:
                    proc.state = _DONE
                return
            except ToolError:
                raise
            except Exception as exc:  # program bug, surface with rank context
                raise ProgramError(proc.rank, exc) from exc
            if isinstance(req, _SendReq):
                self._do_send(proc, req)
            elif isinstance(req, _RecvReq):
                proc.flt = req.filter
                proc.recv_loc = req.source_loc
                proc.state = _BLOCKED
            elif isinstance(req, _VarReq):
                self._do_var(proc, req)
            elif isinstance(req, _ArrayReq):
                self._do_array(proc, req)
            elif isinstance(req, _QueueReq):
                self._do_queue(proc, req)
            else:
                raise ProgramError(
                    proc.rank, TypeError(f"program yielded {req!r}, expected a request")
                )

    def _do_send(self, proc: _Proc, req: _SendReq) -> None:
        if self._at_cap(proc):
            proc.state = _HALTED
            return
        mid = MessageId(proc.rank, self.send_seq[proc.rank])
        env = Envelope(mid, req.dest, req.tag, req.payload)
        send_exit = proc.clock + 1
        ok = self._emit(
            proc, SEND,
            msg=mid, peer=req.dest, tag=req.tag, length=env.length,
            source_loc=req.source_loc,
        )
        assert ok
        self.send_seq[proc.rank] += 1
        self.channels.setdefault((proc.rank, req.dest), deque()).append(
            _InFlight(env, send_exit)
        )
        proc.reply = mid

    def _do_var(self, proc: _Proc, req: _VarReq) -> None:
        from .monitor import VarSnapshot

        self._emit(
            proc, VAR_INSPECT,
            snapshot=VarSnapshot(req.name, req.value), source_loc=req.source_loc,
        )

    def _do_array(self, proc: _Proc, req: _ArrayReq) -> None:
        from . import arrays
        from .errors import InfoMismatch
        from .monitor import PendingArraySnapshot

        info = req.info
        if info.owner_rank != proc.rank:
            raise InfoMismatch(
                f"snapshot owner_rank {info.owner_rank} taken on rank {proc.rank}"
            )
        arrays.check_local_payload(info, req.values)
        self._emit(
            proc, ARRAY_TRACE,
            snapshot=PendingArraySnapshot(info, list(req.values)),
            source_loc=req.source_loc,
        )

    def _do_queue(self, proc: _Proc, req: _QueueReq) -> None:
        from .monitor import QueueSnapshot

        pend = [f.env.id for f in self.pending_for(proc.rank)]
        self._emit(
            proc, QUEUE_INSPECT,
            snapshot=QueueSnapshot(pend), source_loc=req.source_loc,
        )

    # -- delivery -----------------------------------------------------------

    def _head(self, sender: int, dest: int) -> _InFlight | None:
        ch = self.channels.get((sender, dest))
        return ch[0] if ch else None

    def _deliver(self, rank: int, mid: MessageId) -> None:
        proc = self.procs[rank]
        assert proc.state == _BLOCKED and proc.flt is not None
        inflight = self._head(mid.sender, rank)
        assert inflight is not None and inflight.env.id == mid
        env = inflight.env
        proc.clock = max(proc.clock, inflight.send_exit + MESSAGE_LATENCY)
        decision = Decision(rank, proc.events, mid)
        ok = self._emit(
            proc, RECV,
            msg=mid, peer=mid.sender, tag=env.tag, length=env.length,
            wildcard=proc.flt.wildcard, filter_tag=proc.flt.tag,
            source_loc=proc.recv_loc,
        )
        assert ok, "delivery to a capped process"
        self.channels[(mid.sender, rank)].popleft()
        self.deliveries.append(decision)
        wildcard = proc.flt.wildcard
        proc.flt = None
        proc.recv_loc = None
        proc.reply = env
        proc.state = _READY
        if self._driver is not None:
            self._driver.on_delivery(decision, wildcard)

    def _advance(self) -> None:
        """Run all ready processes and auto-resolve explicit-source receives."""
        progress = True
        while progress:
            progress = False
            for proc in self.procs:
                if proc.state == _READY:
                    self._run_proc(proc)
                    progress = True
            for proc in self.procs:
                if proc.state != _BLOCKED or self._at_cap(proc):
                    continue
                flt = proc.flt
                if flt.wildcard:
                    continue
                head = self._head(flt.source, proc.rank)
                if head is not None and flt.admits(head.env):
                    self._deliver(proc.rank, head.env.id)
                    progress = True

    def _options(self) -> dict[int, ChoiceOption]:
        out: dict[int, ChoiceOption] = {}
        for proc in self.procs:
            if proc.state != _BLOCKED or self._at_cap(proc) or not proc.flt.wildcard:
                continue
            cands = []
            for s in range(self.world_size):
                head = self._head(s, proc.rank)
                if head is not None and proc.flt.admits(head.env):
                    cands.append(head.env.id)
            if cands:
                cands.sort()
                out[proc.rank] = ChoiceOption(proc.rank, proc.events, tuple(cands))
        return out

    def _terminal(self) -> bool:
        for proc in self.procs:
            if proc.state == _READY:
                return False
            if proc.state == _BLOCKED and not self._at_cap(proc):
                return False
        return True

    def _final_outputs(self) -> dict[int, bytes]:
        return {r: bytes(b) for r, b in self.outputs.items()}

    def run(self, driver) -> Outcome:
        self._driver = driver
        while True:
            self._advance()
            if self._terminal():
                return Outcome("done", self._final_outputs(), self.deliveries, None, self)
            options = self._options()
            if not options:
                blocked = [p.rank for p in self.procs if p.state == _BLOCKED]
                raise DeadlockError(blocked)
            choice = driver.choose(options)
            if choice is None:
                return Outcome("stopped", self._final_outputs(), self.deliveries, options, self)
            rank, mid = choice
            if rank not in options or mid not in options[rank].candidates:
                raise ScheduleInfeasible(None, f"driver chose undeliverable {mid} for rank {rank}")
            self._deliver(rank, mid)


# --------------------------------------------------------------------------
# Public entry point
# --------------------------------------------------------------------------

def run_program(
    program_name: str,
    world_size: int,
    inputs: dict[str, str] | None = None,
    policy: SchedulerPolicy | None = None,
    monitor=None,
) -> RunResult:
    """Execute a registered program to completion under full scheduler control.

    Raises DeadlockError when no process can step while some are blocked,
    ScheduleInfeasible when a scripted policy cannot be honored, and
    UnknownProgram for unregistered names.
    """
    spec = get_program(program_name)
    if policy is None:
        policy = SchedulerPolicy.seeded(0)
    kernel = Kernel(spec, world_size, inputs or {}, monitor=monitor)
    if monitor is not None:
        monitor.begin_run(program_name, world_size, kernel.inputs, policy.ref())
    outcome = kernel.run(policy.make_driver())
    return RunResult(outcome.outputs, "ok", list(outcome.decisions))
