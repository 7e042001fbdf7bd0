"""RAW time plan for one DTIM cycle, sub-slotting, and the PRAW calendar."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..aid import Aid
from ..errors import Conflict, Infeasible, NoWindow, OutOfRange
from .station import StationKind


@dataclass(frozen=True)
class Segment:
    kind: str  # "multicast" | "dl" | "ul" | "free"
    owner: object
    start: int  # offset from the DTIM beacon, us
    end: int
    subslots: tuple = ()

    @property
    def duration(self) -> int:
        return self.end - self.start

    def slot_bounds(self, k: int) -> tuple[int, int]:
        return self.subslots[k] if self.subslots else (self.start, self.end)


@dataclass(frozen=True)
class TimInterval:
    slot: int
    owner: object
    start: int
    end: int
    tim_beacon: tuple  # (start, end)
    dl: Segment
    ul: Segment
    multicast: Segment | None = None
    free: Segment | None = None
    dtim_beacon: tuple | None = None

    @property
    def raw_end(self) -> int:
        """End of the restricted part of the interval (start of any free tail)."""
        return self.ul.end


@dataclass(frozen=True)
class RawSchedule:
    dtim_interval: int
    tim_interval: int
    intervals: tuple
    beta_dl: Fraction
    subslots_dl: int = 1
    subslots_ul: int = 1
    dtim_airtime: int = 0
    tim_airtime: int = 0
    multicast_airtime: int = 0
    _by_owner: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_owner", {iv.owner: iv for iv in self.intervals})

    @property
    def beta_ul(self) -> Fraction:
        return 1 - self.beta_dl

    @property
    def groups_per_cycle(self) -> int:
        return len(self.intervals)

    def interval_of(self, owner) -> TimInterval:
        return self._by_owner[owner]

    def segments(self, kind: str) -> list[Segment]:
        return [getattr(iv, kind) for iv in self.intervals if getattr(iv, kind) is not None]

    def locate(self, offset: int) -> tuple[TimInterval, str | None]:
        """TIM interval and segment kind covering a cycle offset (None for beacons)."""
        if not 0 <= offset < self.dtim_interval:
            raise OutOfRange(f"offset {offset} outside the cycle")
        iv = self.intervals[offset // self.tim_interval]
        for kind in ("multicast", "dl", "ul", "free"):
            seg = getattr(iv, kind)
            if seg is not None and seg.start <= offset < seg.end:
                return iv, kind
        return iv, None


def beta_from_periods(ul_interarrival, dl_interarrival) -> Fraction:
    """Downlink share of RAW time, proportional to the downlink traffic fraction."""
    ul = Fraction(ul_interarrival)
    dl = Fraction(dl_interarrival)
    if ul <= 0 or dl <= 0:
        raise OutOfRange("inter-arrival times must be positive")
    # rate_dl / (rate_dl + rate_ul) with rate = 1 / period
    return ul / (ul + dl)


def split_even(start: int, end: int, n: int) -> tuple:
    """n contiguous slots covering [start, end); the remainder goes to the last."""
    if n < 1:
        raise OutOfRange("need at least one sub-slot")
    width = (end - start) // n
    bounds = []
    for k in range(n):
        s = start + k * width
        bounds.append((s, end if k == n - 1 else s + width))
    return tuple(bounds)


def build_raw_schedule(tim_interval: int, groups, beta_dl, *, dtim_airtime: int = 0,
                       tim_airtime: int = 0, multicast_airtime: int = 0, subslots_dl: int = 1,
                       subslots_ul: int = 1, raw_share=1) -> RawSchedule:
    """Lay out one DTIM cycle: a TIM interval per group, each with DL and UL segments.

    ``groups`` is either a count or the ordered list of interval owners. The
    first interval also carries the DTIM beacon and the multicast segment.
    """
    owners = list(range(groups)) if isinstance(groups, int) else list(groups)
    if not owners:
        raise OutOfRange("at least one group is required")
    beta = Fraction(beta_dl)
    if not 0 < beta < 1:
        raise OutOfRange(f"beta_dl={beta_dl} must lie strictly between 0 and 1")
    share = Fraction(raw_share)
    if not 0 < share <= 1:
        raise OutOfRange(f"raw_share={raw_share} must lie in (0, 1]")
    if subslots_dl < 1 or subslots_ul < 1:
        raise OutOfRange("sub-slot counts must be >= 1")

    intervals = []
    for slot, owner in enumerate(owners):
        start = slot * tim_interval
        t = start
        dtim_beacon = multicast = None
        if slot == 0:
            dtim_beacon = (t, t + dtim_airtime)
            t += dtim_airtime
            multicast = Segment("multicast", None, t, t + multicast_airtime)
            t += multicast_airtime
        tim_beacon = (t, t + tim_airtime)
        t += tim_airtime
        end = start + tim_interval
        residual = end - t
        if residual <= 0:
            raise Infeasible(f"beacons need {t - start} us but the TIM interval is {tim_interval} us")
        restricted = math.floor(residual * share)
        dl_len = math.floor(restricted * beta)
        dl = Segment("dl", owner, t, t + dl_len, split_even(t, t + dl_len, subslots_dl) if subslots_dl > 1 else ())
        ul_start = t + dl_len
        ul_end = t + restricted
        ul = Segment("ul", owner, ul_start, ul_end,
                     split_even(ul_start, ul_end, subslots_ul) if subslots_ul > 1 else ())
        free = Segment("free", None, ul_end, end) if ul_end < end else None
        intervals.append(TimInterval(slot, owner, start, end, tim_beacon, dl, ul, multicast, free, dtim_beacon))

    return RawSchedule(
        dtim_interval=tim_interval * len(owners),
        tim_interval=tim_interval,
        intervals=tuple(intervals),
        beta_dl=beta,
        subslots_dl=subslots_dl,
        subslots_ul=subslots_ul,
        dtim_airtime=dtim_airtime,
        tim_airtime=tim_airtime,
        multicast_airtime=multicast_airtime,
    )


def assign_subslots(group_members: Iterable[Aid], n_subslots: int) -> dict:
    """Round-robin sub-slot assignment in AID order."""
    if n_subslots < 1:
        raise OutOfRange("need at least one sub-slot")
    return {aid: k % n_subslots for k, aid in enumerate(sorted(group_members))}


# ---------------------------------------------------------------------------
# PRAW reservations and unscheduled access


@dataclass(frozen=True)
class PeriodicWindow:
    offset: int
    duration: int
    period: int

    def __post_init__(self):
        if self.period <= 0 or self.duration <= 0 or self.duration > self.period:
            raise OutOfRange(f"invalid periodic window {self}")

    def occurrences(self, lo: int, hi: int):
        """[start, end) occurrences intersecting [lo, hi)."""
        k = max(0, (lo - self.offset - self.duration) // self.period)
        while True:
            s = self.offset + k * self.period
            if s >= hi:
                return
            if s + self.duration > lo:
                yield (s, s + self.duration)
            k += 1


def periodic_overlap(a: PeriodicWindow, b: PeriodicWindow) -> bool:
    """True iff some occurrence of ``a`` intersects some occurrence of ``b``."""
    g = math.gcd(a.period, b.period)
    return (b.offset - a.offset) % g < a.duration or (a.offset - b.offset) % g < b.duration


@dataclass
class PrawGrant:
    station: Aid
    window: PeriodicWindow


@dataclass
class Calendar:
    """Channel calendar: periodic RAW windows, PRAW grants and one-off bookings."""

    raw: list = field(default_factory=list)
    grants: list = field(default_factory=list)
    bookings: list = field(default_factory=list)
    cycle: int = 0

    @classmethod
    def from_schedule(cls, schedule: RawSchedule) -> "Calendar":
        d = schedule.dtim_interval
        raw = [PeriodicWindow(iv.start, iv.raw_end - iv.start, d) for iv in schedule.intervals]
        return cls(raw=raw, cycle=d)

    def _periodic(self):
        yield from self.raw
        for g in self.grants:
            yield g.window

    def busy(self, lo: int, hi: int) -> list:
        spans = []
        for w in self._periodic():
            spans.extend(w.occurrences(lo, hi))
        spans.extend((s, e) for s, e in self.bookings if e > lo and s < hi)
        spans.sort()
        merged = []
        for s, e in spans:
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        return [tuple(m) for m in merged]


def _require_kind(station, kind):
    actual = getattr(station, "kind", kind)
    if StationKind(actual) is not kind:
        raise OutOfRange(f"station kind {actual} cannot use this procedure (needs {kind.value})")


def reserve_praw(calendar: Calendar, station, request: PeriodicWindow) -> PrawGrant:
    """Grant a periodic exclusive window to a non-TIM station."""
    _require_kind(station, StationKind.NON_TIM)
    for w in calendar._periodic():
        if periodic_overlap(w, request):
            raise Conflict(f"request {request} overlaps {w}")
    aid = getattr(station, "aid", station)
    grant = PrawGrant(aid, request)
    calendar.grants.append(grant)
    return grant


def poll_unscheduled(calendar: Calendar, station, now: int, exchange_us: int) -> tuple[int, int]:
    """Earliest free interval after ``now`` (within one cycle) fitting one exchange."""
    _require_kind(station, StationKind.UNSCHEDULED)
    horizon = now + calendar.cycle
    t = now
    for s, e in calendar.busy(now, horizon):
        if s - t >= exchange_us:
            break
        t = max(t, e)
    if t + exchange_us > horizon:
        raise NoWindow(f"no {exchange_us} us gap outside RAW/PRAW within one cycle from {now}")
    calendar.bookings.append((t, t + exchange_us))
    return (t, t + exchange_us)
