"""Monitor model: timestamp arithmetic, snapshots, probe-effect neutrality."""

import mpdbg
from mpdbg import SchedulerPolicy
from mpdbg.monitor import Monitor, OverheadModel, QueueSnapshot, VarSnapshot
from mpdbg.runtime import Kernel, RawEvent, SeededDriver, get_program
from mpdbg.tracefile import dumps


def test_first_event_timestamp_arithmetic():
    # offset +5 and overhead 2 put the first event at [5, 8]
    model = OverheadModel(per_event_overhead=2, per_process_clock_offset={0: 5})
    mon = Monitor(model)
    mon.begin_run("x", 1, {}, {"kind": "seed", "seed": 0})
    ev = mon.on_runtime_event(RawEvent(process=0, event_no=0, kind="PROC_START", true_enter=0))
    assert (ev.ts_enter, ev.ts_exit, ev.event_no) == (5, 8, 0)


def test_accumulated_overhead_per_event():
    model = OverheadModel(per_event_overhead=2)
    mon = Monitor(model)
    mon.begin_run("x", 1, {}, {"kind": "seed", "seed": 0})
    enters = []
    for k in range(3):
        ev = mon.on_runtime_event(
            RawEvent(process=0, event_no=k, kind="VAR_INSPECT", true_enter=k,
                     snapshot=VarSnapshot("i", k))
        )
        enters.append(ev.ts_enter)
    assert enters == [0, 3, 6]


def run_with_model(program, ws, seed, model, inputs=None):
    mon = Monitor(model)
    mon.begin_run(program, ws, inputs or {}, {"kind": "seed", "seed": seed})
    kernel = Kernel(get_program(program), ws, inputs or {}, monitor=mon)
    outcome = kernel.run(SeededDriver(seed))
    return mon.trace(), outcome


def test_send_event_length_mirrors_payload():
    t, _ = run_with_model("pipeline_chain", 3, 1, OverheadModel())
    for ev in t.iter_events():
        if ev.kind == "SEND":
            assert ev.length is not None and ev.length > 0


def test_recv_wildcard_flag_mirrors_filter():
    t, _ = run_with_model("two_senders", 3, 1, OverheadModel())
    recvs = [e for e in t.iter_events() if e.kind == "RECV"]
    assert all(e.wildcard for e in recvs)
    t, _ = run_with_model("pipeline_chain", 3, 1, OverheadModel())
    recvs = [e for e in t.iter_events() if e.kind == "RECV"]
    assert recvs and all(e.wildcard is False for e in recvs)


def test_probe_effect_neutrality():
    # Identical event sequences and outputs with and without overhead and
    # skew; only timestamps may differ.
    base_t, base_out = run_with_model("distance_doubling", 4, 5, OverheadModel())
    noisy = OverheadModel(per_event_overhead=10,
                          per_process_clock_offset={0: 100, 1: -50, 2: 3, 3: 0})
    noisy_t, noisy_out = run_with_model("distance_doubling", 4, 5, noisy)
    assert base_out.outputs == noisy_out.outputs
    for rank in range(4):
        a = base_t.events[rank]
        b = noisy_t.events[rank]
        assert [e.kind for e in a] == [e.kind for e in b]
        assert [e.msg for e in a] == [e.msg for e in b]
        assert [e.payload_ref for e in a] == [e.payload_ref for e in b]


def test_var_trace_snapshot_and_numbering():
    def prog(ctx):
        yield ctx.trace_var("iter", 7)
        yield ctx.trace_var("blob", b"")

    mpdbg.register_program(mpdbg.ProgramSpec("_vars", prog, frozenset({1})))
    mon = Monitor()
    mpdbg.run_program("_vars", 1, policy=SchedulerPolicy.seeded(0), monitor=mon)
    t = mon.trace()
    evs = t.events[0]
    assert [e.kind for e in evs] == ["PROC_START", "VAR_INSPECT", "VAR_INSPECT", "PROC_END"]
    assert evs[2].event_no - evs[1].event_no == 1
    first = t.snapshots[evs[1].payload_ref]
    assert (first.name, first.value) == ("iter", 7)
    second = t.snapshots[evs[2].payload_ref]
    assert second.value == b""


def test_queue_inspection_lists_pending_sorted():
    def prog(ctx):
        if ctx.rank == 0:
            yield ctx.inspect_queue()          # nothing pending yet
            env = yield ctx.recv(1, 0)
            yield ctx.inspect_queue()          # rank 2's message remains
            env = yield ctx.recv(2, 0)
            yield ctx.inspect_queue()          # drained
        else:
            yield ctx.send(0, 0, str(ctx.rank).encode())

    mpdbg.register_program(mpdbg.ProgramSpec("_queues", prog, frozenset({3})))
    mon = Monitor()
    mpdbg.run_program("_queues", 3, policy=SchedulerPolicy.seeded(0), monitor=mon)
    t = mon.trace()
    snaps = [
        t.snapshots[e.payload_ref]
        for e in t.events[0] if e.kind == "QUEUE_INSPECT"
    ]
    assert isinstance(snaps[0], QueueSnapshot)
    assert snaps[0].pending == []
    assert [(m.sender, m.seq) for m in snaps[1].pending] == [(2, 0)]
    assert snaps[2].pending == []


def test_queue_inspection_two_pending_sorted():
    # ranks 1 and 2 park payloads at rank 0; rank 3 signals once both are
    # out, so the inspection sees both, ordered by (sender, seq)
    def prog(ctx):
        if ctx.rank == 0:
            yield ctx.recv(3, 1)               # the go signal
            yield ctx.inspect_queue()
            yield ctx.recv(1, 0)
            yield ctx.recv(2, 0)
        elif ctx.rank in (1, 2):
            yield ctx.send(0, 0, b"payload")
            yield ctx.send(3, 2, b"done")
        else:
            yield ctx.recv(1, 2)
            yield ctx.recv(2, 2)
            yield ctx.send(0, 1, b"go")

    mpdbg.register_program(mpdbg.ProgramSpec("_queues2", prog, frozenset({4})))
    mon = Monitor()
    mpdbg.run_program("_queues2", 4, policy=SchedulerPolicy.seeded(0), monitor=mon)
    t = mon.trace()
    snap = next(
        t.snapshots[e.payload_ref]
        for e in t.events[0] if e.kind == "QUEUE_INSPECT"
    )
    assert [(m.sender, m.seq) for m in snap.pending] == [(1, 0), (2, 0)]


def test_program_crash_carries_rank_context():
    from mpdbg import ProgramError

    def prog(ctx):
        if ctx.rank == 1:
            raise ValueError("boom")
        yield ctx.recv(1, 0)

    mpdbg.register_program(mpdbg.ProgramSpec("_crash", prog, frozenset({2})))
    import pytest

    with pytest.raises(ProgramError) as exc:
        mpdbg.run_program("_crash", 2)
    assert exc.value.rank == 1
    assert isinstance(exc.value.cause, ValueError)


def test_array_trace_info_mismatch_raised_in_program():
    from mpdbg import InfoMismatch
    from mpdbg.arrays import BLOCK, INT64, ArrayInfo

    def prog(ctx):
        info = ArrayInfo("grid", INT64, (8,), (BLOCK,), (2,), ctx.rank)
        yield ctx.trace_array([1, 2, 3], info)  # descriptor implies 4 elements

    mpdbg.register_program(mpdbg.ProgramSpec("_badarray", prog, frozenset({2})))
    import pytest

    with pytest.raises(InfoMismatch):
        mpdbg.run_program("_badarray", 2)


def test_array_trace_block_snapshot():
    from mpdbg.arrays import BLOCK, INT64, ArrayInfo, ArraySnapshot

    def prog(ctx):
        info = ArrayInfo("grid", INT64, (8,), (BLOCK,), (2,), ctx.rank)
        base = ctx.rank * 4
        yield ctx.trace_array([base, base + 1, base + 2, base + 3], info)

    mpdbg.register_program(mpdbg.ProgramSpec("_okarray", prog, frozenset({2})))
    mon = Monitor()
    mpdbg.run_program("_okarray", 2, policy=SchedulerPolicy.seeded(0), monitor=mon)
    t = mon.trace()
    snaps = [s for s in t.snapshots.values() if isinstance(s, ArraySnapshot)]
    by_rank = {s.info.owner_rank: s for s in snaps}
    assert by_rank[0].local_values == [0, 1, 2, 3]
    assert by_rank[1].local_values == [4, 5, 6, 7]
    assert by_rank[0].at_event is not None


def test_empty_program_records_start_end_only():
    def prog(ctx):
        if False:
            yield

    mpdbg.register_program(mpdbg.ProgramSpec("_empty", prog, frozenset({2})))
    mon = Monitor()
    mpdbg.run_program("_empty", 2, policy=SchedulerPolicy.seeded(0), monitor=mon)
    t = mon.trace()
    for rank in range(2):
        assert [e.kind for e in t.events[rank]] == ["PROC_START", "PROC_END"]
    text = dumps(t)
    assert len(text.splitlines()) == 5  # header + four events
