"""Command-line front door.

Subcommands: run, analyze, races, breakpoint, replay, explore, serve,
programs. All structured output is canonical JSON (sorted keys) so golden
files stay byte-stable. Exit codes: 0 success, 1 usage error, 2 deadlock,
3 malformed trace.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, tracefile
from .errors import (
    DeadlockError,
    FormatError,
    InvalidManipulation,
    ScheduleInfeasible,
    ToolError,
    UnknownProgram,
)
from .monitor import Monitor, OverheadModel
from .replay import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_EXECUTIONS,
    Manipulation,
    MatchSchedule,
    explore_all,
    manipulate_and_replay,
    output_fingerprint,
    read_schedule,
    record,
    replay as replay_schedule,
    run_to_breakpoint,
    write_schedule,
)
from .runtime import Kernel, MessageId, SeededDriver, get_program, registered_programs
from .session import Session, build_report, parse_event_ref
from .tracefile import canonical_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEADLOCK = 2
EXIT_BAD_TRACE = 3


def _parse_inputs(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"--input expects k=v, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k] = v
    return out


def _parse_skew(pairs: list[str]) -> dict[int, int]:
    out = {}
    for pair in pairs or []:
        if ":" not in pair:
            raise ValueError(f"--skew expects RANK:OFFSET, got {pair!r}")
        r, off = pair.split(":", 1)
        out[int(r)] = int(off)
    return out


def _schedule_path(trace_path: str) -> str:
    stem = trace_path
    if stem.endswith(".jsonl"):
        stem = stem[: -len(".jsonl")]
    return stem + ".schedule.json"


def _emit(obj) -> None:
    print(canonical_json(obj))


def _load_trace(path: str):
    return tracefile.read_trace(path)


def _load_schedule_for(trace_path: str, trace) -> MatchSchedule | None:
    import os

    spath = _schedule_path(trace_path)
    if os.path.exists(spath):
        return read_schedule(spath)
    ref = trace.meta.get("seed_or_schedule_ref", {})
    if ref.get("kind") == "seed":
        model = OverheadModel.from_meta(trace.meta.get("overhead_model", {}))
        _, schedule = record(
            trace.meta["program"], trace.world_size,
            trace.meta.get("inputs", {}), seed=int(ref["seed"]), model=model,
        )
        return schedule
    return None


# -- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    inputs = _parse_inputs(args.input)
    model = OverheadModel(
        per_event_overhead=args.overhead,
        per_process_clock_offset=_parse_skew(args.skew),
    )
    spec = get_program(args.program)
    monitor = Monitor(model)
    monitor.begin_run(args.program, args.np, inputs, {"kind": "seed", "seed": args.seed})
    kernel = Kernel(spec, args.np, inputs, monitor=monitor)
    try:
        outcome = kernel.run(SeededDriver(args.seed))
    except DeadlockError as exc:
        tracefile.write_trace(monitor.trace(), args.out)
        _emit({"status": "deadlock", "blocked": exc.blocked, "trace": args.out})
        print(f"deadlock: ranks {exc.blocked} are blocked forever", file=sys.stderr)
        return EXIT_DEADLOCK
    trace = monitor.trace()
    tracefile.write_trace(trace, args.out)
    schedule = MatchSchedule(
        decisions=list(outcome.decisions),
        meta={
            "program": args.program, "world_size": args.np, "inputs": inputs,
            "seed": args.seed, "overhead_model": model.to_meta(),
        },
    )
    spath = _schedule_path(args.out)
    write_schedule(schedule, spath)
    _emit({
        "status": "ok",
        "trace": args.out,
        "schedule": spath,
        "outputs": {str(r): out.decode("utf-8", "replace") for r, out in outcome.outputs.items()},
    })
    return EXIT_OK


def _report_table(report: dict) -> str:
    lines = []
    lines.append(f"program       {report['program']}  (np={report['world_size']})")
    lines.append(f"events        {report['event_counts']}")
    ct = report["corrected_timeline"]
    lines.append(
        "timeline      "
        f"raw violations={ct['raw_causality_violations']} "
        f"corrected={ct['corrected_causality_violations']} (epsilon={ct['epsilon']})"
    )
    lines.append(f"arrays        {', '.join(report['array_collections']) or '-'}")
    lines.append(f"findings      {len(report['findings'])}")
    for f in report["findings"]:
        evs = " ".join(f"{e['process']}:{e['event_no']}" for e in f["events"])
        lines.append(f"  {f['kind']:<16} {evs:<12} {f['detail']}")
    lines.append(f"wildcards     {len(report['wildcard_receives'])}")
    for w in report["wildcard_receives"]:
        e = w["event"]
        lines.append(
            f"  {e['process']}:{e['event_no']}  candidates={w['candidate_count']}"
        )
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    try:
        trace = _load_trace(args.trace)
    except FormatError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_BAD_TRACE
    schedule = _load_schedule_for(args.trace, trace) if args.exact else None
    session = Session.from_trace("cli", trace, schedule)
    report = build_report(session)
    if args.format == "table":
        print(_report_table(report))
    else:
        _emit(report)
    return EXIT_OK


def cmd_races(args) -> int:
    try:
        trace = _load_trace(args.trace)
    except FormatError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_BAD_TRACE
    ref = parse_event_ref(args.event)
    mode = analysis.EXACT_REPLAY if args.mode == "exact" else analysis.HB_FILTER
    schedule = _load_schedule_for(args.trace, trace) if mode == analysis.EXACT_REPLAY else None
    session = Session.from_trace("cli", trace, schedule)
    report = session.races(ref, mode)
    _emit(report.to_json_obj())
    return EXIT_OK


def cmd_breakpoint(args) -> int:
    try:
        trace = _load_trace(args.trace)
    except FormatError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_BAD_TRACE
    session = Session.from_trace("cli", trace)
    ref = parse_event_ref(args.event)
    cut = analysis.compute_breakpoint(session.graph, ref)
    result = cut.to_json_obj()
    if args.halt:
        schedule = _load_schedule_for(args.trace, trace)
        if schedule is None:
            print("no schedule available to halt against", file=sys.stderr)
            return EXIT_USAGE
        halted = run_to_breakpoint(schedule, cut)
        result["halted"] = halted.to_json_obj()
    _emit(result)
    return EXIT_OK


def cmd_replay(args) -> int:
    schedule = read_schedule(args.schedule)
    if args.force:
        if "=" not in args.force:
            raise ValueError("--force expects P:K=SENDER:SEQ")
        at_text, msg_text = args.force.split("=", 1)
        at = parse_event_ref(at_text)
        sender, seq = msg_text.split(":", 1)
        force = MessageId(int(sender), int(seq))
        trace, outputs, new_schedule = manipulate_and_replay(
            schedule,
            Manipulation(at=(at.process, at.event_no), force=force),
            suffix_seed=args.suffix_seed,
        )
    else:
        trace, outputs = replay_schedule(schedule)
        new_schedule = schedule
    result = {
        "status": "ok",
        "outputs": {str(r): out.decode("utf-8", "replace") for r, out in outputs.items()},
        "fingerprint": output_fingerprint(outputs),
    }
    if args.out:
        tracefile.write_trace(trace, args.out)
        spath = _schedule_path(args.out)
        write_schedule(new_schedule, spath)
        result["trace"] = args.out
        result["schedule"] = spath
    _emit(result)
    return EXIT_OK


def cmd_explore(args) -> int:
    try:
        trace = _load_trace(args.trace)
    except FormatError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_BAD_TRACE
    schedule = _load_schedule_for(args.trace, trace)
    if schedule is None:
        print("no schedule available for exploration", file=sys.stderr)
        return EXIT_USAGE
    meta = schedule.meta
    es = explore_all(
        meta["program"], int(meta["world_size"]), meta.get("inputs", {}),
        initial=schedule,
        max_executions=args.max_executions, max_depth=args.max_depth,
    )
    _emit({
        "executions": len(es.executions),
        "truncated": es.truncated,
        "distinct_outputs": sorted(es.distinct_outputs),
        "items": [
            {
                "index": i,
                "fingerprint": ex.fingerprint,
                "decisions": len(ex.schedule.decisions),
                "outputs": {
                    str(r): out.decode("utf-8", "replace") for r, out in ex.outputs.items()
                },
            }
            for i, ex in enumerate(es.executions)
        ],
    })
    return EXIT_OK


def cmd_programs(args) -> int:
    _emit([
        {
            "name": s.name,
            "world_sizes": sorted(s.world_sizes),
            "description": s.description,
            "default_inputs": s.default_inputs,
        }
        for s in registered_programs()
    ])
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(
        port=args.port,
        host=args.host,
        trace_path=args.trace,
        ui_dir=args.ui_dir,
        data_dir=args.data_dir,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpdbg",
        description="record, analyze, replay, and explore message-passing runs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a program and write trace + schedule")
    p.add_argument("program")
    p.add_argument("--np", type=int, required=True, help="number of processes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", action="append", metavar="K=V")
    p.add_argument("--skew", action="append", metavar="RANK:OFFSET")
    p.add_argument("--overhead", type=int, default=0, metavar="TICKS")
    p.add_argument("--out", required=True, metavar="TRACE.jsonl")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("analyze", help="error findings, wildcards, timeline summary")
    p.add_argument("trace")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--exact", action="store_true",
                   help="use exact replay for wildcard candidate counts")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("races", help="racing messages at one wildcard receive")
    p.add_argument("trace")
    p.add_argument("--event", required=True, metavar="P:K")
    p.add_argument("--mode", choices=("hb", "exact"), default="exact")
    p.set_defaults(fn=cmd_races)

    p = sub.add_parser("breakpoint", help="minimal consistent cut for an anchor event")
    p.add_argument("trace")
    p.add_argument("--event", required=True, metavar="P:K")
    p.add_argument("--halt", action="store_true",
                   help="also replay to the cut and report the halted state")
    p.set_defaults(fn=cmd_breakpoint)

    p = sub.add_parser("replay", help="re-run a schedule, optionally forcing a racing message")
    p.add_argument("schedule")
    p.add_argument("--force", metavar="P:K=SENDER:SEQ")
    p.add_argument("--suffix-seed", type=int, default=0)
    p.add_argument("--out", metavar="TRACE.jsonl")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("explore", help="enumerate all reachable executions")
    p.add_argument("trace")
    p.add_argument("--max-executions", type=int, default=DEFAULT_MAX_EXECUTIONS)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("programs", help="list registered programs")
    p.set_defaults(fn=cmd_programs)

    p = sub.add_parser("serve", help="serve the JSON session API (and UI if built)")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--trace", help="trace file to load as the initial session")
    p.add_argument("--ui-dir", help="directory with the built web UI")
    p.add_argument("--data-dir", help="directory for session persistence")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except UnknownProgram as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FormatError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScheduleInfeasible, InvalidManipulation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DeadlockError as exc:
        print(f"deadlock: {exc}", file=sys.stderr)
        return EXIT_DEADLOCK
    except ToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
