"""Record&replay controller and systematic schedule exploration.

A match schedule is the ordered list of receive-match decisions one run
made; it is the unit of replay. Replaying a schedule reproduces the
recorded trace exactly (time is simulated, so timestamps included).
Manipulated replay re-runs the prefix before a chosen wildcard receive,
forces a selected racing message there, and continues under a fresh seed.
Exploration enumerates every reachable execution by branching over all
deliverable candidates at every wildcard receive, deduplicating runs that
assign the same message to every receive.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    DeadlockError,
    FormatError,
    InvalidManipulation,
    ScheduleInfeasible,
)
from .monitor import Monitor, OverheadModel, Trace
from .runtime import (
    ChoiceOption,
    Decision,
    Kernel,
    MessageId,
    Outcome,
    ScriptedDriver,
    SeededDriver,
    get_program,
)
from .tracefile import canonical_json

DEFAULT_MAX_EXECUTIONS = 1024
DEFAULT_MAX_DEPTH = 64


@dataclass
class MatchSchedule:
    """Every receive's match from one run, in the order they resolved."""

    decisions: list[Decision]
    meta: dict

    def decision_for(self, process: int, recv_event_no: int) -> Decision | None:
        for d in self.decisions:
            if d.process == process and d.recv_event_no == recv_event_no:
                return d
        return None

    def prefix_before(self, process: int, recv_event_no: int) -> list[Decision]:
        """Decisions strictly before the given receive in this run's order."""
        out = []
        for d in self.decisions:
            if d.process == process and d.recv_event_no == recv_event_no:
                return out
            out.append(d)
        raise KeyError(f"no decision for receive {process}:{recv_event_no}")

    def to_json_obj(self) -> dict:
        return {
            "meta": self.meta,
            "decisions": [
                {
                    "process": d.process,
                    "recv_event_no": d.recv_event_no,
                    "msg": {"sender": d.msg.sender, "seq": d.msg.seq},
                }
                for d in self.decisions
            ],
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json_obj()) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MatchSchedule":
        if not isinstance(obj, dict) or "decisions" not in obj or "meta" not in obj:
            raise FormatError(1, "schedule must carry meta and decisions")
        decisions = [
            Decision(
                int(d["process"]),
                int(d["recv_event_no"]),
                MessageId(int(d["msg"]["sender"]), int(d["msg"]["seq"])),
            )
            for d in obj["decisions"]
        ]
        return cls(decisions=decisions, meta=obj["meta"])

    @classmethod
    def loads(cls, text: str) -> "MatchSchedule":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(1, f"invalid JSON: {exc.msg}") from exc
        return cls.from_json_obj(obj)


def write_schedule(schedule: MatchSchedule, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(schedule.dumps())


def read_schedule(path: str) -> MatchSchedule:
    with open(path, "r", encoding="utf-8") as fh:
        return MatchSchedule.loads(fh.read())


@dataclass(frozen=True)
class Manipulation:
    at: tuple[int, int]  # (process, event_no) of a wildcard receive
    force: MessageId


@dataclass
class Execution:
    schedule: MatchSchedule
    trace: Trace
    outputs: dict[int, bytes]

    @property
    def fingerprint(self) -> str:
        return output_fingerprint(self.outputs)


@dataclass
class ExecutionSet:
    executions: list[Execution]
    distinct_outputs: set[str]
    truncated: bool
    deadlocked: int = 0


def output_fingerprint(outputs: dict[int, bytes]) -> str:
    h = hashlib.sha256()
    for rank in sorted(outputs):
        h.update(str(rank).encode())
        h.update(b"=")
        h.update(outputs[rank])
        h.update(b"|")
    return h.hexdigest()[:16]


def _run_meta(program: str, world_size: int, inputs: dict, seed, model: OverheadModel) -> dict:
    return {
        "program": program,
        "world_size": world_size,
        "inputs": dict(inputs),
        "seed": seed,
        "overhead_model": model.to_meta(),
    }


def _meta_model(meta: dict) -> OverheadModel:
    return OverheadModel.from_meta(meta.get("overhead_model", {}))


# --------------------------------------------------------------------------
# Record / replay
# --------------------------------------------------------------------------

def record(
    program: str,
    world_size: int,
    inputs: dict[str, str] | None = None,
    seed: int = 0,
    model: OverheadModel | None = None,
) -> tuple[Trace, MatchSchedule]:
    """Run once under the seeded policy and capture trace plus schedule."""
    inputs = dict(inputs or {})
    model = model or OverheadModel()
    spec = get_program(program)
    monitor = Monitor(model)
    monitor.begin_run(program, world_size, inputs, {"kind": "seed", "seed": seed})
    kernel = Kernel(spec, world_size, inputs, monitor=monitor)
    outcome = kernel.run(SeededDriver(seed))
    schedule = MatchSchedule(
        decisions=list(outcome.decisions),
        meta=_run_meta(program, world_size, inputs, seed, model),
    )
    return monitor.trace(), schedule


def replay(schedule: MatchSchedule) -> tuple[Trace, dict[int, bytes]]:
    """Re-run a schedule; every receive matches exactly as recorded."""
    meta = schedule.meta
    spec = get_program(meta["program"])
    model = _meta_model(meta)
    monitor = Monitor(model)
    monitor.begin_run(
        meta["program"], int(meta["world_size"]), meta.get("inputs", {}),
        {"kind": "schedule", "decisions": len(schedule.decisions)},
    )
    kernel = Kernel(spec, int(meta["world_size"]), meta.get("inputs", {}), monitor=monitor)
    driver = ScriptedDriver(schedule.decisions)
    outcome = kernel.run(driver)
    leftovers = driver.leftovers()
    if leftovers:
        raise ScheduleInfeasible(leftovers[0], "run finished with unconsumed decisions")
    return monitor.trace(), outcome.outputs


# --------------------------------------------------------------------------
# Partial-scripted probe runs (exploration building block)
# --------------------------------------------------------------------------

class _ProbeDriver(ScriptedDriver):
    """Serve a decision prefix, then stop at the first free wildcard choice.

    Receives without queued decisions are "free". Explicit-source receives
    resolve themselves inside the kernel and are simply logged.
    """

    def __init__(self, decisions: list[Decision]):
        super().__init__(decisions)
        self.strict = False

    def free_options(self, options: dict[int, ChoiceOption]) -> dict[int, ChoiceOption]:
        return {r: opt for r, opt in options.items() if not self._queue(r)}

    def choose(self, options: dict[int, ChoiceOption]):
        pick = self._servable(options)
        if pick is not None:
            return pick
        if self.free_options(options):
            return None  # stop: exploration must branch here
        stuck = self._first_pending(options)
        raise ScheduleInfeasible(stuck, "scheduled message is not deliverable")


def _probe(program: str, world_size: int, inputs: dict, prefix: list[Decision],
           monitor: Monitor | None = None, caps: dict[int, int] | None = None) -> tuple[Outcome, _ProbeDriver]:
    spec = get_program(program)
    kernel = Kernel(spec, world_size, inputs, monitor=monitor, caps=caps)
    driver = _ProbeDriver(prefix)
    outcome = kernel.run(driver)
    return outcome, driver


def _assignment_key(decisions: Iterable[Decision], world_size: int) -> tuple:
    per_rank: list[list] = [[] for _ in range(world_size)]
    for d in decisions:
        per_rank[d.process].append((d.recv_event_no, d.msg.sender, d.msg.seq))
    return tuple(tuple(lst) for lst in per_rank)


# --------------------------------------------------------------------------
# Exact racing candidates
# --------------------------------------------------------------------------

def exact_candidates(schedule: MatchSchedule, anchor) -> set[MessageId]:
    """Messages the anchor wildcard receive can accept in some execution
    that agrees with the schedule on every decision before the anchor."""
    anchor_proc, anchor_no = int(anchor[0]), int(anchor[1])
    meta = schedule.meta
    program = meta["program"]
    world_size = int(meta["world_size"])
    inputs = meta.get("inputs", {})
    prefix = schedule.prefix_before(anchor_proc, anchor_no)

    found: set[MessageId] = set()
    seen: set[tuple] = set()

    def explore(extra: list[Decision]) -> None:
        try:
            outcome, driver = _probe(program, world_size, inputs, prefix + extra)
        except DeadlockError:
            return
        key = _assignment_key(outcome.decisions, world_size)
        if key in seen:
            return
        seen.add(key)
        if outcome.status != "stopped":
            return
        options = outcome.options or {}
        free = driver.free_options(options)
        anchor_opt = free.get(anchor_proc)
        if anchor_opt is not None:
            if anchor_opt.recv_event_no != anchor_no:
                raise ScheduleInfeasible(
                    None,
                    f"rank {anchor_proc} reached receive {anchor_opt.recv_event_no}, "
                    f"expected anchor {anchor_no}",
                )
            found.update(anchor_opt.candidates)
        for rank in sorted(free):
            if rank == anchor_proc:
                continue
            opt = free[rank]
            for mid in opt.candidates:
                explore(extra + [Decision(rank, opt.recv_event_no, mid)])

    explore([])
    return found


# --------------------------------------------------------------------------
# Manipulated replay
# --------------------------------------------------------------------------

class _HybridDriver(ScriptedDriver):
    """Prefix decisions scripted, one receive forced, the rest seeded."""

    def __init__(self, prefix: list[Decision], anchor: tuple[int, int],
                 force: MessageId, suffix_seed: int):
        super().__init__(prefix)
        self.strict = False
        self.anchor = anchor
        self.force = force
        self.anchor_done = False
        self._suffix = SeededDriver(suffix_seed)

    def on_delivery(self, decision: Decision, wildcard: bool) -> None:
        if (decision.process, decision.recv_event_no) == self.anchor:
            self.anchor_done = True
        super().on_delivery(decision, wildcard)

    def choose(self, options: dict[int, ChoiceOption]):
        pick = self._servable(options)
        if pick is not None:
            return pick
        free = {r: o for r, o in options.items() if not self._queue(r)}
        if not self.anchor_done:
            anchor_rank, anchor_no = self.anchor
            opt = free.get(anchor_rank)
            if opt is not None and opt.recv_event_no == anchor_no:
                if self.force in opt.candidates:
                    return anchor_rank, self.force
                others = {r: o for r, o in free.items() if r != anchor_rank}
                if not others:
                    raise ScheduleInfeasible(
                        Decision(anchor_rank, anchor_no, self.force),
                        "forced message cannot become deliverable",
                    )
                return self._suffix.choose(others)
            others = {r: o for r, o in free.items() if r != anchor_rank}
            if others:
                return self._suffix.choose(others)
            stuck = self._first_pending(options)
            raise ScheduleInfeasible(stuck, "scheduled message is not deliverable")
        if free:
            return self._suffix.choose(free)
        stuck = self._first_pending(options)
        raise ScheduleInfeasible(stuck, "scheduled message is not deliverable")


def manipulate_and_replay(
    base: MatchSchedule,
    manipulation: Manipulation,
    suffix_seed: int = 0,
) -> tuple[Trace, dict[int, bytes], MatchSchedule]:
    """Replay up to the chosen wildcard receive, force one racing message
    there, then run free under the suffix seed. Returns the new run and its
    own (fully replayable) schedule."""
    anchor = (int(manipulation.at[0]), int(manipulation.at[1]))
    force = manipulation.force
    candidates = exact_candidates(base, anchor)
    if force not in candidates:
        raise InvalidManipulation(
            f"message {force.sender}:{force.seq} is not a racing candidate at "
            f"{anchor[0]}:{anchor[1]} (candidates: "
            f"{[f'{m.sender}:{m.seq}' for m in sorted(candidates)]})"
        )
    meta = base.meta
    program = meta["program"]
    world_size = int(meta["world_size"])
    inputs = meta.get("inputs", {})
    model = _meta_model(meta)
    prefix = base.prefix_before(*anchor)
    spec = get_program(program)
    monitor = Monitor(model)
    monitor.begin_run(
        program, world_size, inputs,
        {"kind": "manipulated", "at": f"{anchor[0]}:{anchor[1]}",
         "force": {"sender": force.sender, "seq": force.seq},
         "suffix_seed": suffix_seed},
    )
    kernel = Kernel(spec, world_size, inputs, monitor=monitor)
    driver = _HybridDriver(prefix, anchor, force, suffix_seed)
    outcome = kernel.run(driver)
    schedule = MatchSchedule(
        decisions=list(outcome.decisions),
        meta=_run_meta(program, world_size, inputs, suffix_seed, model),
    )
    return monitor.trace(), outcome.outputs, schedule


# --------------------------------------------------------------------------
# Run to a breakpoint cut
# --------------------------------------------------------------------------

@dataclass
class HaltedState:
    next_event_no: dict[int, int]
    pending: dict[int, list[MessageId]]
    queue_snapshots: dict[int, list[dict]]

    def to_json_obj(self) -> dict:
        return {
            "next_event_no": {str(k): v for k, v in sorted(self.next_event_no.items())},
            "pending": {
                str(k): [{"sender": m.sender, "seq": m.seq} for m in v]
                for k, v in sorted(self.pending.items())
            },
            "queue_snapshots": {str(k): v for k, v in sorted(self.queue_snapshots.items())},
        }


def run_to_breakpoint(schedule: MatchSchedule, cut) -> HaltedState:
    """Replay until every process has executed exactly stop_after[q]+1 events."""
    meta = schedule.meta
    program = meta["program"]
    world_size = int(meta["world_size"])
    inputs = meta.get("inputs", {})
    stop_after = {int(q): int(n) for q, n in dict(cut.stop_after).items()}
    caps = {q: stop_after.get(q, -1) + 1 for q in range(world_size)}
    try:
        outcome, _driver = _probe(
            program, world_size, inputs, list(schedule.decisions), caps=caps
        )
    except DeadlockError as exc:
        raise ScheduleInfeasible(None, f"stalled before reaching the cut: {exc}") from exc
    kernel = outcome.kernel
    next_event_no = {p.rank: p.events for p in kernel.procs}
    for q, cap in caps.items():
        if next_event_no[q] != cap:
            raise ScheduleInfeasible(
                None, f"rank {q} halted after {next_event_no[q]} events, cut wants {cap}"
            )
    pending = {}
    queue_snapshots = {}
    for rank in range(world_size):
        inflight = kernel.pending_for(rank)
        pending[rank] = [f.env.id for f in inflight]
        queue_snapshots[rank] = [
            {"sender": f.env.id.sender, "seq": f.env.id.seq,
             "tag": f.env.tag, "length": f.env.length}
            for f in inflight
        ]
    return HaltedState(next_event_no, pending, queue_snapshots)


# --------------------------------------------------------------------------
# Exhaustive exploration
# --------------------------------------------------------------------------

def explore_all(
    program: str,
    world_size: int,
    inputs: dict[str, str] | None = None,
    initial: MatchSchedule | None = None,
    max_executions: int = DEFAULT_MAX_EXECUTIONS,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> ExecutionSet:
    """Enumerate every reachable execution, branching over all racing
    candidates at every wildcard receive. Executions are deduplicated by
    their receive-match assignment; outcome variety is reported separately
    as output fingerprints."""
    inputs = dict(inputs or {})
    model = _meta_model(initial.meta) if initial is not None else OverheadModel()
    complete: dict[tuple, list[Decision]] = {}
    seen_states: set[tuple] = set()
    truncated = False
    deadlocked = 0

    def explore(extra: list[Decision]) -> None:
        nonlocal truncated, deadlocked
        if truncated or len(complete) >= max_executions:
            truncated = truncated or len(complete) >= max_executions
            return
        if len(extra) > max_depth:
            truncated = True
            return
        try:
            outcome, driver = _probe(program, world_size, inputs, list(extra))
        except DeadlockError:
            deadlocked += 1
            return
        key = _assignment_key(outcome.decisions, world_size)
        if outcome.status == "done":
            complete.setdefault(key, list(outcome.decisions))
            return
        if key in seen_states:
            return
        seen_states.add(key)
        free = driver.free_options(outcome.options or {})
        for rank in sorted(free):
            opt = free[rank]
            for mid in opt.candidates:
                explore(extra + [Decision(rank, opt.recv_event_no, mid)])

    explore([])

    executions: list[Execution] = []
    fingerprints: set[str] = set()
    for key in sorted(complete):
        decisions = complete[key]
        schedule = MatchSchedule(
            decisions=decisions,
            meta=_run_meta(program, world_size, inputs, None, model),
        )
        trace, outputs = replay(schedule)
        ex = Execution(schedule=schedule, trace=trace, outputs=outputs)
        fingerprints.add(ex.fingerprint)
        executions.append(ex)
    return ExecutionSet(
        executions=executions,
        distinct_outputs=fingerprints,
        truncated=truncated,
        deadlocked=deadlocked,
    )
