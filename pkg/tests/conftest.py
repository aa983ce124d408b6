import sys
from pathlib import Path

import hypothesis
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from mpdbg.monitor import Event, Trace

hypothesis.settings.register_profile("fast", max_examples=15)
hypothesis.settings.register_profile("thorough", max_examples=200)
hypothesis.settings.load_profile("fast")


def make_meta(program="handmade", world_size=2, overhead=0, offsets=None):
    return {
        "format": "mpdbg-trace-v1",
        "program": program,
        "world_size": world_size,
        "inputs": {},
        "seed_or_schedule_ref": {"kind": "seed", "seed": 0},
        "overhead_model": {
            "per_event_overhead": overhead,
            "per_process_clock_offset": {str(k): v for k, v in (offsets or {}).items()},
        },
        "created_at": "2000-01-01T00:00:00Z",
    }


def make_trace(per_process_events, **meta_kw):
    """Hand-written trace helper: per_process_events maps rank to a list of
    kwargs dicts; event_no and default timestamps are filled in."""
    world_size = meta_kw.pop("world_size", max(per_process_events) + 1)
    events = {r: [] for r in range(world_size)}
    for rank, specs in per_process_events.items():
        for k, spec in enumerate(specs):
            spec = dict(spec)
            spec.setdefault("ts_enter", k)
            spec.setdefault("ts_exit", spec["ts_enter"] + 1)
            events.setdefault(rank, []).append(
                Event(event_no=k, process=rank, **spec)
            )
    return Trace(meta=make_meta(world_size=world_size, **meta_kw), events=events)


@pytest.fixture
def two_senders_run():
    from mpdbg.replay import record

    return record("two_senders", 3, seed=1)
