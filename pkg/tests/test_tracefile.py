"""Trace serialization: round trips and malformed-input handling."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mpdbg
from mpdbg import FormatError
from mpdbg.monitor import OverheadModel
from mpdbg.replay import record
from mpdbg.tracefile import dumps, loads, read_trace, write_trace

PROGRAMS = [
    ("two_senders", 3, {}),
    ("three_senders", 4, {}),
    ("pipeline_chain", 4, {}),
    ("distance_doubling", 4, {}),
    ("poisson", 2, {"n": "6", "iters": "3"}),
]


@settings(max_examples=12)
@given(
    case=st.sampled_from(PROGRAMS),
    seed=st.integers(min_value=0, max_value=999),
)
def test_round_trip_identity(case, seed):
    program, ws, inputs = case
    trace, _ = record(program, ws, inputs, seed=seed)
    assert loads(dumps(trace)) == trace


def test_round_trip_with_overhead_model(tmp_path):
    model = OverheadModel(per_event_overhead=3, per_process_clock_offset={0: 4, 2: -1})
    trace, _ = record("two_senders", 3, seed=2, model=model)
    path = tmp_path / "t.jsonl"
    write_trace(trace, str(path))
    again = read_trace(str(path))
    assert again == trace
    assert again.meta["overhead_model"]["per_event_overhead"] == 3


def test_missing_header_line():
    with pytest.raises(FormatError) as exc:
        loads("")
    assert exc.value.line == 1


def test_header_must_be_run_header():
    with pytest.raises(FormatError):
        loads('{"event_no": 0}\n')
    with pytest.raises(FormatError):
        loads("[1,2,3]\n")


def test_invalid_json_line_reports_line_number():
    trace, _ = record("two_senders", 3, seed=1)
    text = dumps(trace)
    broken = text.splitlines()
    broken[3] = "{not json"
    with pytest.raises(FormatError) as exc:
        loads("\n".join(broken))
    assert exc.value.line == 4


def test_unknown_event_kind_rejected():
    trace, _ = record("two_senders", 3, seed=1)
    text = dumps(trace).replace('"kind":"SEND"', '"kind":"TELEPORT"', 1)
    with pytest.raises(FormatError):
        loads(text)


def test_missing_required_field_rejected():
    trace, _ = record("two_senders", 3, seed=1)
    text = dumps(trace).replace('"ts_enter":0,', "", 1)
    with pytest.raises(FormatError):
        loads(text)


def test_numbering_gap_rejected():
    header = (
        '{"format":"mpdbg-trace-v1","program":"x","world_size":1,'
        '"inputs":{},"overhead_model":{}}'
    )
    lines = [
        header,
        '{"event_no":0,"process":0,"kind":"PROC_START","ts_enter":0,"ts_exit":1}',
        '{"event_no":2,"process":0,"kind":"PROC_END","ts_enter":2,"ts_exit":3}',
    ]
    with pytest.raises(FormatError):
        loads("\n".join(lines))


def test_snapshots_round_trip():
    trace, _ = record("poisson", 2, {"n": "6", "iters": "2"}, seed=0)
    again = loads(dumps(trace))
    assert again.snapshots.keys() == trace.snapshots.keys()
    for sid, snap in trace.snapshots.items():
        assert again.snapshots[sid] == snap


def test_hand_written_trace_is_acceptable():
    # Analysis must accept traces the runtime could never produce.
    header = (
        '{"format":"mpdbg-trace-v1","program":"handmade","world_size":2,'
        '"inputs":{},"overhead_model":{}}'
    )
    lines = [
        header,
        '{"event_no":0,"process":0,"kind":"SEND","ts_enter":0,"ts_exit":1,'
        '"msg":{"sender":0,"seq":0},"peer":1,"tag":0,"length":64}',
        '{"event_no":0,"process":1,"kind":"RECV","ts_enter":0,"ts_exit":1,'
        '"msg":{"sender":0,"seq":0},"peer":0,"tag":0,"length":32,"wildcard":false}',
    ]
    trace = loads("\n".join(lines))
    assert trace.events[0][0].length == 64
    assert trace.events[1][0].length == 32
