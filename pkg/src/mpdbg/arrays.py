"""Distributed-array snapshots: ownership math, reassembly, display data.

Supports 1D and 2D arrays distributed BLOCK or CYCLIC per dimension over a
rectangular process grid. Block ownership of extent n over p parts gives
rank r the slice [r*ceil(n/p), min(n, (r+1)*ceil(n/p))); cyclic ownership
gives rank r every index congruent to r modulo p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .errors import EmptyView, InfoMismatch, InvalidInfo, OverlapConflict

BLOCK = "BLOCK"
CYCLIC = "CYCLIC"
INT64 = "INT64"
FLOAT64 = "FLOAT64"

_DISTRIBUTIONS = (BLOCK, CYCLIC)
_ELEMENT_TYPES = (INT64, FLOAT64)


@dataclass(frozen=True)
class ArrayInfo:
    """Distribution descriptor for one rank's slice of a shared array."""

    collection_id: str
    element_type: str
    global_shape: tuple[int, ...]
    distribution: tuple[str, ...]
    process_grid: tuple[int, ...]
    owner_rank: int

    def __post_init__(self):
        object.__setattr__(self, "global_shape", tuple(int(x) for x in self.global_shape))
        object.__setattr__(self, "distribution", tuple(self.distribution))
        object.__setattr__(self, "process_grid", tuple(int(x) for x in self.process_grid))

    def validate(self) -> None:
        if self.element_type not in _ELEMENT_TYPES:
            raise InvalidInfo(f"unknown element type {self.element_type!r}")
        ndim = len(self.global_shape)
        if ndim not in (1, 2):
            raise InvalidInfo("only 1D and 2D arrays are supported")
        if len(self.distribution) != ndim or len(self.process_grid) != ndim:
            raise InvalidInfo("distribution and process_grid must match the array rank")
        for d in self.distribution:
            if d not in _DISTRIBUTIONS:
                raise InvalidInfo(f"unknown distribution {d!r}")
        for n in self.global_shape:
            if n < 1:
                raise InvalidInfo("global extents must be >= 1")
        for p in self.process_grid:
            if p < 1:
                raise InvalidInfo("process grid extents must be >= 1")
        nprocs = math.prod(self.process_grid)
        if not (0 <= self.owner_rank < nprocs):
            raise InvalidInfo(
                f"owner_rank {self.owner_rank} outside process grid of {nprocs}"
            )

    def grid_coords(self, rank: int) -> tuple[int, ...]:
        coords = []
        rem = rank
        for extent in reversed(self.process_grid):
            coords.append(rem % extent)
            rem //= extent
        return tuple(reversed(coords))

    def to_json_obj(self) -> dict:
        return {
            "collection_id": self.collection_id,
            "element_type": self.element_type,
            "global_shape": list(self.global_shape),
            "distribution": list(self.distribution),
            "process_grid": list(self.process_grid),
            "owner_rank": self.owner_rank,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ArrayInfo":
        return cls(
            collection_id=obj["collection_id"],
            element_type=obj["element_type"],
            global_shape=tuple(obj["global_shape"]),
            distribution=tuple(obj["distribution"]),
            process_grid=tuple(obj["process_grid"]),
            owner_rank=int(obj["owner_rank"]),
        )


@dataclass
class ArraySnapshot:
    info: ArrayInfo
    local_values: list
    at_event: tuple[int, int] | None = None  # (process, event_no)


@dataclass
class GlobalArrayView:
    collection_id: str
    shape: tuple[int, ...]
    values: list  # row-major, None where absent
    present_mask: list
    contributing: set[int] = field(default_factory=set)


def _dim_indices(extent: int, parts: int, coord: int, dist: str) -> list[int]:
    if dist == BLOCK:
        width = -(-extent // parts)  # ceil
        lo = coord * width
        hi = min(extent, lo + width)
        return list(range(lo, max(lo, hi)))
    return list(range(coord, extent, parts))


def local_indices(info: ArrayInfo) -> list[tuple[int, ...]]:
    """Global index tuples owned by info.owner_rank, row-major order."""
    info.validate()
    coords = info.grid_coords(info.owner_rank)
    per_dim = [
        _dim_indices(info.global_shape[d], info.process_grid[d], coords[d], info.distribution[d])
        for d in range(len(info.global_shape))
    ]
    if len(per_dim) == 1:
        return [(i,) for i in per_dim[0]]
    return [(i, j) for i in per_dim[0] for j in per_dim[1]]


def local_extent(info: ArrayInfo) -> tuple[int, ...]:
    """Per-dimension local sizes for info.owner_rank."""
    info.validate()
    coords = info.grid_coords(info.owner_rank)
    return tuple(
        len(_dim_indices(info.global_shape[d], info.process_grid[d], coords[d], info.distribution[d]))
        for d in range(len(info.global_shape))
    )


def check_local_payload(info: ArrayInfo, values: list) -> None:
    expected = math.prod(local_extent(info))
    if len(values) != expected:
        raise InfoMismatch(
            f"{len(values)} elements supplied, descriptor implies {expected}"
        )
    caster = int if info.element_type == INT64 else float
    for v in values:
        if not isinstance(v, (int, float)):
            raise InfoMismatch(f"element {v!r} is not numeric")
        caster(v)


def _flat(shape: tuple[int, ...], idx: tuple[int, ...]) -> int:
    if len(shape) == 1:
        return idx[0]
    return idx[0] * shape[1] + idx[1]


def assemble(snapshots: list[ArraySnapshot]) -> GlobalArrayView:
    """Merge per-rank snapshots of one collection into a global view.

    All snapshots must share the descriptor modulo owner_rank. Overlapping
    contributions must agree on every element.
    """
    if not snapshots:
        raise InfoMismatch("no snapshots supplied")
    base = snapshots[0].info
    base.validate()
    key = (base.collection_id, base.element_type, base.global_shape,
           base.distribution, base.process_grid)
    total = math.prod(base.global_shape)
    values: list = [None] * total
    mask = [False] * total
    contributing: set[int] = set()
    for snap in snapshots:
        info = snap.info
        if (info.collection_id, info.element_type, info.global_shape,
                info.distribution, info.process_grid) != key:
            raise InfoMismatch("snapshots carry differing descriptors")
        check_local_payload(info, snap.local_values)
        for pos, idx in enumerate(local_indices(info)):
            flat = _flat(base.global_shape, idx)
            v = snap.local_values[pos]
            if mask[flat] and values[flat] != v:
                raise OverlapConflict(idx)
            values[flat] = v
            mask[flat] = True
        contributing.add(info.owner_rank)
    return GlobalArrayView(
        collection_id=base.collection_id,
        shape=base.global_shape,
        values=values,
        present_mask=mask,
        contributing=contributing,
    )


def heat_diagram(view: GlobalArrayView) -> tuple[list, float, float]:
    """Min-max normalize present elements into [0, 1]; absent cells stay None.

    A constant array maps to 0.5 everywhere so it still renders.
    """
    present = [v for v, ok in zip(view.values, view.present_mask) if ok]
    if not present:
        raise EmptyView("no elements present in view")
    lo = min(present)
    hi = max(present)
    span = hi - lo
    out = []
    for v, ok in zip(view.values, view.present_mask):
        if not ok:
            out.append(None)
        elif span == 0:
            out.append(0.5)
        else:
            out.append((v - lo) / span)
    return out, float(lo), float(hi)


def mapping_view(info: ArrayInfo, world_size: int) -> list[int]:
    """Row-major grid of owner ranks, one entry per global element."""
    info.validate()
    if math.prod(info.process_grid) != world_size:
        raise InvalidInfo(
            f"process grid {info.process_grid} does not cover world of {world_size}"
        )
    total = math.prod(info.global_shape)
    owners = [-1] * total
    for rank in range(world_size):
        rinfo = ArrayInfo(
            info.collection_id, info.element_type, info.global_shape,
            info.distribution, info.process_grid, rank,
        )
        for idx in local_indices(rinfo):
            owners[_flat(info.global_shape, idx)] = rank
    return owners


def scatter(info_template: ArrayInfo, world_size: int, global_values: list) -> list[ArraySnapshot]:
    """Split a known global array into per-rank snapshots (testing aid)."""
    snaps = []
    for rank in range(world_size):
        info = ArrayInfo(
            info_template.collection_id, info_template.element_type,
            info_template.global_shape, info_template.distribution,
            info_template.process_grid, rank,
        )
        locals_ = [global_values[_flat(info.global_shape, idx)] for idx in local_indices(info)]
        snaps.append(ArraySnapshot(info=info, local_values=locals_))
    return snaps
