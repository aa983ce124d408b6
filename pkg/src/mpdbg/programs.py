"""Built-in example programs for the simulated runtime.

Each program is a generator function taking a ProcContext. Event-producing
calls are yielded (``mid = yield ctx.send(...)``); plain output is not.
The set deliberately spans the interesting cases: pure wildcard races
(two_senders, three_senders), a deterministic pipeline, a numeric solver
with halo exchange and an array snapshot (poisson), a reduction whose
wildcard receives change its result (distance_doubling), and a guaranteed
deadlock (deadlock_pair).
"""

from __future__ import annotations

import json
import struct

from .arrays import BLOCK, FLOAT64, ArrayInfo
from .runtime import ANY_SOURCE, ProgramSpec, register_program


def _two_senders(ctx):
    """Ranks 1 and 2 each send one byte to rank 0, which receives twice
    from any source. The two receive matches race."""
    if ctx.rank == 0:
        for _ in range(2):
            env = yield ctx.recv(ANY_SOURCE, 0)
            ctx.output(env.payload)
    else:
        yield ctx.send(0, 0, str(ctx.rank).encode())


def _three_senders(ctx):
    if ctx.rank == 0:
        for _ in range(3):
            env = yield ctx.recv(ANY_SOURCE, 0)
            ctx.output(env.payload)
    else:
        yield ctx.send(0, 0, str(ctx.rank).encode())


def _pipeline_chain(ctx):
    """Token threads through the ranks in order; fully deterministic."""
    last = ctx.world_size - 1
    if ctx.rank == 0:
        token = b"T0"
        yield ctx.trace_var("token", token)
        yield ctx.send(1, 0, token)
    else:
        if ctx.rank == last:
            yield ctx.inspect_queue()
        env = yield ctx.recv(ctx.rank - 1, 0)
        token = env.payload + b"-" + str(ctx.rank).encode()
        yield ctx.trace_var("token", token)
        if ctx.rank < last:
            yield ctx.send(ctx.rank + 1, 0, token)
        else:
            ctx.output(token)


def _poisson(ctx):
    """Jacobi iteration for -u'' = 1 on (0,1) with zero boundary values.

    The n interior points are block-distributed; every iteration swaps halo
    values with both neighbors using explicit sources, so the program has a
    single possible execution. Each rank snapshots its block at the end and
    prints it as JSON.
    """
    n = int(ctx.inputs.get("n", "16"))
    iters = int(ctx.inputs.get("iters", "50"))
    p = ctx.world_size
    width = -(-n // p)
    lo = ctx.rank * width
    hi = min(n, lo + width)
    if hi <= lo:
        raise ValueError(f"empty block: n={n} leaves rank {ctx.rank} no points")
    h = 1.0 / (n + 1)
    rhs = h * h  # f == 1 everywhere
    u = [0.0] * (hi - lo)
    left = ctx.rank - 1 if ctx.rank > 0 else None
    right = ctx.rank + 1 if ctx.rank < p - 1 else None
    for _ in range(iters):
        if left is not None:
            yield ctx.send(left, 0, struct.pack("<d", u[0]))
        if right is not None:
            yield ctx.send(right, 1, struct.pack("<d", u[-1]))
        halo_l = 0.0
        halo_r = 0.0
        if left is not None:
            env = yield ctx.recv(left, 1)
            halo_l = struct.unpack("<d", env.payload)[0]
        if right is not None:
            env = yield ctx.recv(right, 0)
            halo_r = struct.unpack("<d", env.payload)[0]
        ext = [halo_l] + u + [halo_r]
        u = [0.5 * (ext[i - 1] + ext[i + 1] + rhs) for i in range(1, len(ext) - 1)]
    info = ArrayInfo(
        collection_id="poisson_grid",
        element_type=FLOAT64,
        global_shape=(n,),
        distribution=(BLOCK,),
        process_grid=(p,),
        owner_rank=ctx.rank,
    )
    yield ctx.trace_array(u, info)
    ctx.output(json.dumps(u).encode())


def _distance_doubling(ctx):
    """Butterfly combine over log2(p) rounds with a non-commutative merge.

    Every receive accepts any source, so a rank can pick up a partner's
    next-round message instead of its current partner's, which changes the
    concatenated result. Each rank still receives exactly as many messages
    as are addressed to it, so no schedule deadlocks or strands a message.
    """
    steps = ctx.world_size.bit_length() - 1
    val = str(ctx.rank)
    for step in range(steps):
        partner = ctx.rank ^ (1 << step)
        yield ctx.send(partner, 0, val.encode())
        env = yield ctx.recv(ANY_SOURCE, 0)
        val = val + env.payload.decode()
    ctx.output(val.encode())


def _deadlock_pair(ctx):
    """Both ranks receive before either sends; blocks forever by design."""
    peer = 1 - ctx.rank
    env = yield ctx.recv(peer, 0)
    yield ctx.send(peer, 0, env.payload)


def register_builtin_programs() -> list[ProgramSpec]:
    """Idempotently (re)register the built-in demo programs."""
    specs = [
        ProgramSpec(
            "two_senders", _two_senders, frozenset({3}),
            "two racing senders, one wildcard receiver",
        ),
        ProgramSpec(
            "three_senders", _three_senders, frozenset({4}),
            "three racing senders, one wildcard receiver",
        ),
        ProgramSpec(
            "pipeline_chain", _pipeline_chain, frozenset(range(2, 9)),
            "deterministic token pipeline with variable inspection",
        ),
        ProgramSpec(
            "poisson", _poisson, frozenset({2, 4}),
            "block-distributed Jacobi solver, schedule-invariant",
            default_inputs={"n": "16", "iters": "50"},
        ),
        ProgramSpec(
            "distance_doubling", _distance_doubling, frozenset({2, 4, 8}),
            "butterfly reduction whose wildcard matches change the output",
        ),
        ProgramSpec(
            "deadlock_pair", _deadlock_pair, frozenset({2}),
            "mutual receive-before-send, deadlocks immediately",
        ),
    ]
    return [register_program(s) for s in specs]


register_builtin_programs()
