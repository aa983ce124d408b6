#!/usr/bin/env python3
"""Survey race behavior of every built-in program: wildcard receives,
candidate-set sizes, execution counts, and outcome variety.

Usage: python scripts/race_census.py [max_executions]
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mpdbg import (
    EXACT_REPLAY,
    build_graph,
    explore_all,
    find_wildcard_receives,
    racing_messages,
    record,
    registered_programs,
)

CASES = {
    "two_senders": (3, {}),
    "three_senders": (4, {}),
    "pipeline_chain": (4, {}),
    "poisson": (4, {"n": "16", "iters": "50"}),
    "distance_doubling": (4, {}),
}


def main() -> None:
    limit = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
    header = f"{'program':<20}{'wildcards':>10}{'max cands':>10}{'execs':>8}{'outcomes':>10}"
    print(header)
    print("-" * len(header))
    for spec in registered_programs():
        if spec.name not in CASES:
            continue
        ws, inputs = CASES[spec.name]
        trace, schedule = record(spec.name, ws, inputs, seed=1)
        g = build_graph(trace)
        wildcards = find_wildcard_receives(g)
        max_cands = 0
        for ref in wildcards:
            report = racing_messages(g, ref, EXACT_REPLAY, schedule)
            max_cands = max(max_cands, len(report.candidates))
        es = explore_all(spec.name, ws, inputs, initial=schedule, max_executions=limit)
        execs = f"{len(es.executions)}{'+' if es.truncated else ''}"
        print(f"{spec.name:<20}{len(wildcards):>10}{max_cands:>10}{execs:>8}"
              f"{len(es.distinct_outputs):>10}")


if __name__ == "__main__":
    main()
