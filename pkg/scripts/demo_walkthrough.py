#!/usr/bin/env python3
"""End-to-end walkthrough: record, analyze, race-evaluate, manipulate,
and exhaustively explore the bundled example programs.

Writes traces under ./demo_out/ and prints a narrated summary. Start the
interactive viewer afterwards with:

    python -m mpdbg serve --trace demo_out/distance_doubling.jsonl
"""

from __future__ import annotations

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mpdbg import (
    EXACT_REPLAY,
    Manipulation,
    build_graph,
    detect_errors,
    explore_all,
    find_wildcard_receives,
    manipulate_and_replay,
    racing_messages,
    record,
    replay,
    write_schedule,
    write_trace,
)
from mpdbg.monitor import OverheadModel

OUT = pathlib.Path("demo_out")


def banner(text: str) -> None:
    print(f"\n=== {text} " + "=" * max(0, 60 - len(text)))


def main() -> None:
    OUT.mkdir(exist_ok=True)

    banner("poisson: deterministic solver, array snapshot")
    trace, schedule = record("poisson", 4, {"n": "16", "iters": "50"}, seed=1)
    write_trace(trace, str(OUT / "poisson.jsonl"))
    write_schedule(schedule, str(OUT / "poisson.schedule.json"))
    g = build_graph(trace)
    print("findings:", detect_errors(g))
    print("wildcard receives:", find_wildcard_receives(g))
    print("executions:", len(explore_all("poisson", 4, {"n": "16", "iters": "50"}).executions))

    banner("distance_doubling: the irreproducibility effect")
    outputs = {}
    for seed in range(1, 9):
        res_trace, res_schedule = record("distance_doubling", 4, seed=seed)
        _, out = replay(res_schedule)
        outputs[seed] = b"|".join(out[r] for r in range(4)).decode()
    for seed, out in outputs.items():
        print(f"  seed {seed}: {out}")
    print("distinct outcomes across seeds:", len(set(outputs.values())))

    banner("record once, then evaluate races at every wildcard receive")
    trace, schedule = record("distance_doubling", 4, seed=1, model=OverheadModel(
        per_event_overhead=4, per_process_clock_offset={0: 9, 1: -6, 2: 17, 3: 0},
    ))
    write_trace(trace, str(OUT / "distance_doubling.jsonl"))
    write_schedule(schedule, str(OUT / "distance_doubling.schedule.json"))
    g = build_graph(trace)
    for ref in find_wildcard_receives(g):
        report = racing_messages(g, ref, EXACT_REPLAY, schedule)
        cands = ", ".join(f"{m.sender}:{m.seq}" for m in report.candidates)
        star = " <- race" if len(report.candidates) > 1 else ""
        print(f"  recv {ref.process}:{ref.event_no}  candidates {{{cands}}}{star}")

    banner("manipulate one racing receive and compare outcomes")
    target = next(
        ref for ref in find_wildcard_receives(g)
        if len(racing_messages(g, ref, EXACT_REPLAY, schedule).candidates) > 1
    )
    report = racing_messages(g, target, EXACT_REPLAY, schedule)
    alternative = next(m for m in report.candidates if m != report.observed)
    _, base_out = replay(schedule)
    _, new_out, _ = manipulate_and_replay(
        schedule, Manipulation(at=(target.process, target.event_no), force=alternative),
        suffix_seed=1,
    )
    print("  baseline :", {r: v.decode() for r, v in base_out.items()})
    print("  forced   :", {r: v.decode() for r, v in new_out.items()})

    banner("exhaustive exploration")
    es = explore_all("distance_doubling", 4, initial=schedule)
    print(f"  executions: {len(es.executions)}  distinct outputs: {len(es.distinct_outputs)}"
          f"  truncated: {es.truncated}")

    print("\ndone; traces in", OUT.resolve())


if __name__ == "__main__":
    main()
