"""Hierarchical association identifiers and DTIM/TIM bitmap signaling.

An AID packs four fields into 13 bits::

    page(2) | block(5) | subblock(3) | index(3)

A *block* is a TIM group. AID 0 is reserved, so at most 8191 stations can be
associated.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import CapacityExceeded, MissingTim, OffsetOverflow, OutOfRange, ZeroAid

PAGE_BITS = 2
BLOCK_BITS = 5
SUBBLOCK_BITS = 3
INDEX_BITS = 3

AID_BITS = PAGE_BITS + BLOCK_BITS + SUBBLOCK_BITS + INDEX_BITS
MAX_AID = (1 << AID_BITS) - 1
N_PAGES = 1 << PAGE_BITS
N_BLOCKS = 1 << BLOCK_BITS
N_SUBBLOCKS = 1 << SUBBLOCK_BITS
N_INDICES = 1 << INDEX_BITS
STATIONS_PER_BLOCK = N_SUBBLOCKS * N_INDICES

_INDEX_SHIFT = 0
_SUBBLOCK_SHIFT = INDEX_BITS
_BLOCK_SHIFT = INDEX_BITS + SUBBLOCK_BITS
_PAGE_SHIFT = INDEX_BITS + SUBBLOCK_BITS + BLOCK_BITS

TIM_OFFSET_BITS = 5
MAX_TIM_OFFSET = (1 << TIM_OFFSET_BITS) - 1


class SignalingMode(str, enum.Enum):
    NON_TIM_OFFSET = "non-tim-offset"
    TIM_OFFSET = "tim-offset"


class GroupingPolicy(str, enum.Enum):
    DENSE = "dense"
    ROUND_ROBIN = "round-robin"


GroupKey = tuple  # (page, block)


@dataclass(frozen=True, order=True)
class Aid:
    raw: int
    page: int = field(compare=False)
    block: int = field(compare=False)
    subblock: int = field(compare=False)
    index: int = field(compare=False)

    @property
    def group(self) -> tuple[int, int]:
        return (self.page, self.block)

    @property
    def position(self) -> int:
        """Ordinal of the station inside its TIM group bitmap."""
        return self.subblock * N_INDICES + self.index

    def __str__(self):
        return f"AID {self.raw} (page {self.page}, block {self.block}, subblock {self.subblock}, index {self.index})"


def _check(name, value, bits):
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < (1 << bits):
        raise OutOfRange(f"{name}={value!r} does not fit in {bits} bits")


def encode_aid(page: int, block: int, subblock: int, index: int) -> Aid:
    _check("page", page, PAGE_BITS)
    _check("block", block, BLOCK_BITS)
    _check("subblock", subblock, SUBBLOCK_BITS)
    _check("index", index, INDEX_BITS)
    raw = (page << _PAGE_SHIFT) | (block << _BLOCK_SHIFT) | (subblock << _SUBBLOCK_SHIFT) | index
    if raw == 0:
        raise ZeroAid("AID 0 is reserved")
    return Aid(raw, page, block, subblock, index)


def decode_aid(raw: int) -> tuple[int, int, int, int]:
    if not isinstance(raw, int) or isinstance(raw, bool) or not 1 <= raw <= MAX_AID:
        raise OutOfRange(f"raw AID {raw!r} outside [1, {MAX_AID}]")
    return (
        (raw >> _PAGE_SHIFT) & (N_PAGES - 1),
        (raw >> _BLOCK_SHIFT) & (N_BLOCKS - 1),
        (raw >> _SUBBLOCK_SHIFT) & (N_SUBBLOCKS - 1),
        (raw >> _INDEX_SHIFT) & (N_INDICES - 1),
    )


def aid_from_raw(raw: int) -> Aid:
    return Aid(raw, *decode_aid(raw))


def assign_aids(n_stations: int, policy=GroupingPolicy.DENSE, layout=None) -> list[Aid]:
    """Allocate ``n_stations`` distinct AIDs, sorted by raw value.

    ``dense`` fills index, then subblock, block and page, which is simply raw
    AIDs 1..n. ``round-robin`` deals stations across the (page, block) groups of
    ``layout=(pages, blocks)`` (default: the whole AID space) so that group
    sizes differ by at most one.
    """
    policy = GroupingPolicy(policy)
    if n_stations < 0:
        raise OutOfRange(f"n_stations={n_stations} is negative")
    if n_stations > MAX_AID:
        raise CapacityExceeded(f"{n_stations} stations exceed the {MAX_AID}-AID space")
    if policy is GroupingPolicy.DENSE:
        return [aid_from_raw(r) for r in range(1, n_stations + 1)]

    pages, blocks = layout if layout is not None else (N_PAGES, N_BLOCKS)
    if not (1 <= pages <= N_PAGES and 1 <= blocks <= N_BLOCKS):
        raise OutOfRange(f"layout {pages}x{blocks} outside {N_PAGES}x{N_BLOCKS}")
    groups = [(p, b) for p in range(pages) for b in range(blocks)]
    # group (0, 0) loses one slot to the reserved AID 0
    capacity = len(groups) * STATIONS_PER_BLOCK - 1
    if n_stations > capacity:
        raise CapacityExceeded(f"{n_stations} stations exceed layout {pages}x{blocks} capacity {capacity}")
    fill = {g: (1 if g == (0, 0) else 0) for g in groups}
    out = []
    i = 0
    while len(out) < n_stations:
        g = groups[i % len(groups)]
        i += 1
        if fill[g] >= STATIONS_PER_BLOCK:
            continue
        sub, idx = divmod(fill[g], N_INDICES)
        fill[g] += 1
        out.append(encode_aid(g[0], g[1], sub, idx))
    return sorted(out)


def interval_owner(aid: Aid, mode) -> object:
    """Key of the TIM interval (and RAW segments) a station contends in.

    With non-TIM-offset signaling the same block of every page shares one TIM
    beacon, so the owner is the block number; with TIM-offset each (page,
    block) group gets its own beacon.
    """
    if SignalingMode(mode) is SignalingMode.NON_TIM_OFFSET:
        return aid.block
    return aid.group


def interval_owners(groups: Iterable[tuple[int, int]], mode) -> list:
    """Ordered TIM-interval owners for a set of defined (page, block) groups."""
    groups = sorted(set(groups))
    if SignalingMode(mode) is SignalingMode.NON_TIM_OFFSET:
        return sorted({b for _, b in groups})
    return groups


def bitmap_hex(ordinals: Iterable[int], width: int) -> str:
    """Render a bit-set as hex; ordinal 0 is the most significant bit."""
    value = 0
    for o in ordinals:
        if not 0 <= o < width:
            raise OutOfRange(f"ordinal {o} outside bitmap width {width}")
        value |= 1 << (width - 1 - o)
    return format(value, f"0{(width + 3) // 4}x")


@dataclass(frozen=True)
class TimBitmap:
    group: tuple[int, int]
    pending_stations: frozenset = frozenset()  # (subblock, index)

    def has(self, aid: Aid) -> bool:
        return aid.group == self.group and (aid.subblock, aid.index) in self.pending_stations

    def hex(self) -> str:
        return bitmap_hex((s * N_INDICES + i for s, i in self.pending_stations), STATIONS_PER_BLOCK)


@dataclass(frozen=True)
class DtimBitmap:
    pending_groups: frozenset = frozenset()  # (page, block)
    tim_offsets: Mapping | None = None
    raw_geometry: tuple = ()

    def __post_init__(self):
        if self.tim_offsets is not None:
            for g, off in self.tim_offsets.items():
                if not 0 <= off <= MAX_TIM_OFFSET:
                    raise OffsetOverflow(f"TIM offset {off} of group {g} does not fit in {TIM_OFFSET_BITS} bits")

    def has_group(self, group) -> bool:
        return tuple(group) in self.pending_groups

    def hex(self) -> str:
        return bitmap_hex((p * N_BLOCKS + b for p, b in self.pending_groups), N_PAGES * N_BLOCKS)


@dataclass(frozen=True)
class BeaconFrame:
    kind: str  # "dtim" | "tim"
    slot: int  # 0 for the DTIM, TIM-interval ordinal otherwise
    dtim: DtimBitmap | None = None
    tims: tuple = ()

    def tim_for(self, group) -> TimBitmap | None:
        for t in self.tims:
            if t.group == tuple(group):
                return t
        return None


def station_may_sleep(aid: Aid, dtim: DtimBitmap, tim: TimBitmap | None, has_uplink: bool) -> bool:
    if has_uplink:
        return False
    if not dtim.has_group(aid.group):
        return True
    if tim is None or tim.group != aid.group:
        raise MissingTim(f"group {aid.group} is signaled in the DTIM but its TIM bitmap was not supplied")
    return not tim.has(aid)


def build_beacon_sequence(groups: Sequence[tuple[int, int]], mode, pending: Iterable[Aid],
                          raw_geometry: tuple = ()) -> list[BeaconFrame]:
    """One DTIM beacon followed by the TIM beacons of a scheduling cycle."""
    mode = SignalingMode(mode)
    groups = sorted({tuple(g) for g in groups})
    if not groups:
        raise OutOfRange("at least one TIM group is required")
    defined = set(groups)
    per_group: dict[tuple[int, int], set] = {g: set() for g in groups}
    for aid in pending:
        if aid.group not in defined:
            raise OutOfRange(f"{aid} belongs to an undefined TIM group")
        per_group[aid.group].add((aid.subblock, aid.index))

    pending_groups = frozenset(g for g, s in per_group.items() if s)
    tims = []
    offsets = None
    if mode is SignalingMode.NON_TIM_OFFSET:
        pages = sorted({p for p, _ in groups})
        for slot, block in enumerate(interval_owners(groups, mode)):
            bitmaps = tuple(TimBitmap((p, block), frozenset(per_group.get((p, block), ()))) for p in pages)
            tims.append(BeaconFrame("tim", slot, tims=bitmaps))
    else:
        offsets = {}
        for slot, g in enumerate(groups):
            if slot > MAX_TIM_OFFSET:
                raise OffsetOverflow(f"group {g} needs TIM offset {slot} > {MAX_TIM_OFFSET}")
            offsets[g] = slot
            tims.append(BeaconFrame("tim", slot, tims=(TimBitmap(g, frozenset(per_group[g])),)))
    dtim = DtimBitmap(pending_groups, offsets, tuple(raw_geometry))
    return [BeaconFrame("dtim", 0, dtim=dtim)] + tims
