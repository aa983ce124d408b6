"""Distribution math, reassembly, heat normalization, owner mapping."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpdbg import EmptyView, InfoMismatch, InvalidInfo, OverlapConflict
from mpdbg.arrays import (
    BLOCK,
    CYCLIC,
    FLOAT64,
    INT64,
    ArrayInfo,
    ArraySnapshot,
    assemble,
    heat_diagram,
    local_extent,
    local_indices,
    mapping_view,
    scatter,
)


def info_1d(n, p, rank, dist=BLOCK, etype=INT64, cid="a"):
    return ArrayInfo(cid, etype, (n,), (dist,), (p,), rank)


def test_block_extents():
    assert local_extent(info_1d(8, 2, 0)) == (4,)
    assert local_indices(info_1d(8, 2, 0)) == [(i,) for i in range(4)]
    assert local_indices(info_1d(7, 2, 1)) == [(4,), (5,), (6,)]


def test_cyclic_extents():
    assert local_indices(info_1d(8, 2, 1, CYCLIC)) == [(1,), (3,), (5,), (7,)]


def test_invalid_info_rejected():
    with pytest.raises(InvalidInfo):
        local_extent(info_1d(0, 2, 0))
    with pytest.raises(InvalidInfo):
        local_extent(ArrayInfo("a", INT64, (4,), (BLOCK,), (2,), 5))
    with pytest.raises(InvalidInfo):
        local_extent(ArrayInfo("a", "STRING", (4,), (BLOCK,), (2,), 0))
    with pytest.raises(InvalidInfo):
        local_extent(ArrayInfo("a", INT64, (2, 2, 2), (BLOCK,) * 3, (1, 1, 1), 0))


@settings(max_examples=60)
@given(
    n=st.integers(min_value=1, max_value=40),
    p=st.integers(min_value=1, max_value=8),
    dist=st.sampled_from([BLOCK, CYCLIC]),
)
def test_partition_property_1d(n, p, dist):
    seen = {}
    for rank in range(p):
        for idx in local_indices(info_1d(n, p, rank, dist)):
            assert idx not in seen, f"index {idx} owned twice"
            seen[idx] = rank
    assert len(seen) == n


@settings(max_examples=40)
@given(
    rows=st.integers(min_value=1, max_value=10),
    cols=st.integers(min_value=1, max_value=10),
    grid=st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2), (4, 1), (2, 3)]),
    dists=st.tuples(st.sampled_from([BLOCK, CYCLIC]), st.sampled_from([BLOCK, CYCLIC])),
)
def test_partition_property_2d(rows, cols, grid, dists):
    world = grid[0] * grid[1]
    seen = set()
    for rank in range(world):
        info = ArrayInfo("m", FLOAT64, (rows, cols), dists, grid, rank)
        for idx in local_indices(info):
            assert idx not in seen
            seen.add(idx)
    assert len(seen) == rows * cols


def test_assemble_round_trip_block():
    tmpl = info_1d(8, 2, 0)
    snaps = scatter(tmpl, 2, list(range(8)))
    assert snaps[0].local_values == [0, 1, 2, 3]
    view = assemble(snaps)
    assert view.values == list(range(8))
    assert all(view.present_mask)
    assert view.contributing == {0, 1}


def test_assemble_partial_coverage():
    tmpl = info_1d(8, 2, 0)
    snaps = scatter(tmpl, 2, list(range(8)))
    view = assemble(snaps[:1])
    assert view.present_mask == [True] * 4 + [False] * 4
    assert view.values[4:] == [None] * 4


def test_assemble_descriptor_mismatch():
    a = ArraySnapshot(info_1d(8, 2, 0), [0, 1, 2, 3])
    b = ArraySnapshot(info_1d(6, 2, 1), [0, 1, 2])
    with pytest.raises(InfoMismatch):
        assemble([a, b])


def test_assemble_payload_size_mismatch():
    with pytest.raises(InfoMismatch):
        assemble([ArraySnapshot(info_1d(8, 2, 0), [1, 2, 3])])


def test_assemble_overlap_conflict():
    a = ArraySnapshot(info_1d(4, 1, 0), [1, 2, 3, 4])
    b = ArraySnapshot(info_1d(4, 1, 0), [1, 2, 9, 4])
    with pytest.raises(OverlapConflict):
        assemble([a, b])
    # agreeing overlap is fine
    view = assemble([a, ArraySnapshot(info_1d(4, 1, 0), [1, 2, 3, 4])])
    assert view.values == [1, 2, 3, 4]


def test_heat_normalization():
    view = assemble(scatter(info_1d(3, 1, 0), 1, [0, 5, 10]))
    values, lo, hi = heat_diagram(view)
    assert values == [0.0, 0.5, 1.0]
    assert (lo, hi) == (0, 10)


def test_heat_constant_array():
    view = assemble(scatter(info_1d(4, 1, 0), 1, [7, 7, 7, 7]))
    values, lo, hi = heat_diagram(view)
    assert values == [0.5] * 4
    assert (lo, hi) == (7, 7)


def test_heat_absent_cells_null():
    snaps = scatter(info_1d(8, 2, 0), 2, list(range(8)))
    view = assemble(snaps[1:])
    values, lo, hi = heat_diagram(view)
    assert values[:4] == [None] * 4
    assert values[4:] == [0.0, 1 / 3, 2 / 3, 1.0]


def test_heat_empty_view_rejected():
    from mpdbg.arrays import GlobalArrayView

    empty = GlobalArrayView("x", (2,), [None, None], [False, False])
    with pytest.raises(EmptyView):
        heat_diagram(empty)


@settings(max_examples=40)
@given(
    values=st.lists(
        st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=2, max_size=12
    ),
    scale=st.floats(min_value=0.5, max_value=4, allow_nan=False),
    shift=st.floats(min_value=-10, max_value=10, allow_nan=False),
)
def test_heat_affine_invariance(values, scale, shift):
    # the 1e-12 tolerance presumes the transform does not wash out the
    # data's own resolution, so keep the span comfortably above rounding
    if max(values) - min(values) < 1.0:
        values = values + [min(values) + 1.0]
    base = assemble(scatter(info_1d(len(values), 1, 0, dist=BLOCK, etype=FLOAT64), 1, values))
    moved = assemble(scatter(
        info_1d(len(values), 1, 0, dist=BLOCK, etype=FLOAT64), 1,
        [scale * v + shift for v in values],
    ))
    a, _, _ = heat_diagram(base)
    b, _, _ = heat_diagram(moved)
    assert all(abs(x - y) <= 1e-12 for x, y in zip(a, b))


def test_mapping_view_1d():
    assert mapping_view(info_1d(8, 2, 0), 2) == [0, 0, 0, 0, 1, 1, 1, 1]
    assert mapping_view(info_1d(8, 2, 0, CYCLIC), 2) == [0, 1, 0, 1, 0, 1, 0, 1]


def test_mapping_view_2d_quadrants():
    info = ArrayInfo("m", INT64, (4, 4), (BLOCK, BLOCK), (2, 2), 0)
    owners = mapping_view(info, 4)
    grid = [owners[r * 4:(r + 1) * 4] for r in range(4)]
    assert grid == [
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [2, 2, 3, 3],
        [2, 2, 3, 3],
    ]


def test_mapping_view_world_size_mismatch():
    with pytest.raises(InvalidInfo):
        mapping_view(info_1d(8, 2, 0), 3)


def test_2d_assembly_round_trip():
    info = ArrayInfo("m", INT64, (4, 4), (BLOCK, BLOCK), (2, 2), 0)
    values = list(range(16))
    view = assemble(scatter(info, 4, values))
    assert view.values == values
    cyc = ArrayInfo("m", INT64, (4, 4), (CYCLIC, CYCLIC), (2, 2), 0)
    view = assemble(scatter(cyc, 4, values))
    assert view.values == values
