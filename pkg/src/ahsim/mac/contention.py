"""DCF contention inside RAW segments and the frame exchanges it arbitrates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from ..phy import FrameKind, PhyProfile, airtime, control_frame, data_frame
from .station import Direction, Packet, PowerEvent, PowerEventKind, Radio, StationState, advance_power_state

AP = 0
BROADCAST = -1

_TICK = PowerEventKind.BACKOFF_TICK
_TX_END = PowerEventKind.TX_END
_RX_START = PowerEventKind.RX_START
_RX_END = PowerEventKind.RX_END
_TX_START = PowerEventKind.TX_START
_SEG_START = PowerEventKind.SEGMENT_START
_SEG_END = PowerEventKind.SEGMENT_END


class SlotOwner(NamedTuple):
    """Segment owner tag for a frame sent inside a sub-slot."""
    owner: object
    subslot: int


@dataclass(frozen=True)
class MacTiming:
    slot: int = 52
    sifs: int = 160
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: int = 7
    ndp_control: bool = True
    rts_cts_uplink: bool = True
    speed_frame_exchange: bool = False

    @property
    def difs(self) -> int:
        return self.sifs + 2 * self.slot


def dcf_draw_backoff(rng, cw: int) -> int:
    """Uniform backoff in [0, cw] slots."""
    if cw < 0:
        raise ValueError("contention window must be non-negative")
    return rng.randint(0, cw)


def next_cw(cw: int, cw_max: int) -> int:
    """Contention window after a failed attempt: 2(cw+1)-1, capped."""
    return min(2 * cw + 1, cw_max)


@dataclass(frozen=True)
class Step:
    sender: str  # "sta" | "ap"
    kind: FrameKind
    duration: int
    delivers: Packet | None = None
    acks: Packet | None = None


@dataclass
class ExchangeResult:
    station: int  # raw AID
    direction: Direction
    packet: Packet
    outcome: str  # "acked" | "dropped" | "deferred"
    attempts: int
    delivered_at: int | None
    collisions: int = 0
    extra: list = field(default_factory=list)  # packets settled through speed frame exchange


@dataclass
class FrameRecord:
    start: int
    end: int
    src: int
    dst: int
    kind: str
    outcome: str
    direction: str
    segment: object


@dataclass
class SegmentStats:
    collisions: int = 0
    attempts: int = 0
    retransmissions: int = 0
    corrupted: int = 0


class AirtimeBook:
    """Caches frame airtimes for one PHY profile and MAC configuration."""

    def __init__(self, profile: PhyProfile, timing: MacTiming, payload_bytes: int = 100):
        self.profile = profile
        self.timing = timing
        self.ctrl = {k: airtime(control_frame(k, timing.ndp_control), profile.top_rate, profile)
                     for k in (FrameKind.RTS, FrameKind.CTS, FrameKind.ACK, FrameKind.PS_POLL)}
        self._data_frame = data_frame(payload_bytes)
        self._data = {}

    def data(self, rate: int) -> int:
        d = self._data.get(rate)
        if d is None:
            d = self._data[rate] = airtime(self._data_frame, rate, self.profile)
        return d

    def control(self, kind: FrameKind, rate: int) -> int:
        if self.timing.ndp_control:
            return self.ctrl[kind]
        return airtime(control_frame(kind, False), rate, self.profile)

    def steps(self, direction: Direction, rate: int, packet: Packet | None, reverse: Packet | None = None):
        c = self.control
        if direction is Direction.DL:
            seq = [Step("sta", FrameKind.PS_POLL, c(FrameKind.PS_POLL, rate)),
                   Step("ap", FrameKind.DATA, self.data(rate), delivers=packet)]
            if reverse is not None:
                seq.append(Step("sta", FrameKind.DATA, self.data(rate), delivers=reverse, acks=packet))
                seq.append(Step("ap", FrameKind.ACK, c(FrameKind.ACK, rate), acks=reverse))
            else:
                seq.append(Step("sta", FrameKind.ACK, c(FrameKind.ACK, rate), acks=packet))
            return seq
        seq = []
        if self.timing.rts_cts_uplink:
            seq += [Step("sta", FrameKind.RTS, c(FrameKind.RTS, rate)),
                    Step("ap", FrameKind.CTS, c(FrameKind.CTS, rate))]
        seq += [Step("sta", FrameKind.DATA, self.data(rate), delivers=packet),
                Step("ap", FrameKind.ACK, c(FrameKind.ACK, rate), acks=packet)]
        return seq

    def exchange_duration(self, steps) -> int:
        return sum(s.duration for s in steps) + self.timing.sifs * (len(steps) - 1)

    def min_exchange(self, direction: Direction, rate: int) -> int:
        """Uncontended exchange including DIFS and zero backoff."""
        return self.timing.difs + self.exchange_duration(self.steps(direction, rate, None))


@dataclass
class _Contender:
    st: StationState
    packet: Packet
    reverse: Packet | None = None
    steps: list = None
    duration: int = 0
    result: ExchangeResult = None
    collisions: int = 0
    acked_flags: set = field(default_factory=set)


def _ev(st, kind, t, pending=False, slots=0):
    advance_power_state(st, PowerEvent(kind, t, pending, slots))


def contend(direction: Direction, start: int, end: int, owner, entries, book: AirtimeBook, rng,
            per: float, stats: SegmentStats | None = None,
            log: Callable[[FrameRecord], None] | None = None, contention: bool = True) -> list[ExchangeResult]:
    """Slotted DCF among ``entries`` inside ``[start, end)``.

    ``entries`` are ``(station, packet)`` or ``(station, packet, reverse_packet)``
    tuples. Every station must be asleep or idle when called; all of them wake
    at ``start`` and are asleep again when this returns. Exchanges that would
    cross ``end`` are deferred rather than started.

    With ``contention=False`` (an exclusive window) there is no backoff and a
    failed attempt is deferred to the next window instead of retried in place.
    """
    timing = book.timing
    stats = stats if stats is not None else SegmentStats()
    sifs, slot, difs = timing.sifs, timing.slot, timing.difs
    timeout_extra = sifs + book.profile.preamble_duration

    active = []
    for entry in entries:
        st, pkt = entry[0], entry[1]
        rev = entry[2] if len(entry) > 2 else None
        c = _Contender(st, pkt, rev)
        c.steps = book.steps(direction, st.rate, pkt, rev)
        c.duration = book.exchange_duration(c.steps)
        st.retries = pkt.attempts
        st.backoff = dcf_draw_backoff(rng, st.cw) if contention else 0
        _ev(st, _SEG_START, start)
        active.append(c)
    done: list[_Contender] = []

    t = start
    while active:
        m = min(c.st.backoff for c in active)
        t_tx = t + difs + m * slot
        if t_tx >= end:
            # nothing can start before the boundary any more
            for c in active:
                _finish(c, direction, "deferred", max(t, c.st.since), done, timing.cw_min)
            break
        winners = []
        waiting = []
        for c in active:
            if c.st.backoff == m:
                if t_tx + c.duration <= end:
                    winners.append(c)
                else:
                    c.st.backoff = 0
                    _finish(c, direction, "deferred", t_tx, done, timing.cw_min)
            else:
                waiting.append(c)
        if not winners:
            for c in waiting:
                _ev(c.st, _TICK, t_tx, slots=m)
            active = waiting
            t = t_tx
            continue
        for c in winners:
            _ev(c.st, _TICK, t_tx, slots=m)  # reaches zero -> transmitting
            c.packet.attempts += 1
            stats.attempts += 1
            if c.packet.attempts > 1:
                stats.retransmissions += 1

        if len(winners) > 1:
            stats.collisions += 1
            air_end = t_tx
            for c in winners:
                first = c.steps[0]
                fe = t_tx + first.duration
                air_end = max(air_end, fe)
                _ev(c.st, _TX_END, fe, pending=True)
                c.collisions += 1
                if log:
                    log(FrameRecord(t_tx, fe, c.st.aid.raw, AP, first.kind.value, "collision",
                                    direction.value, owner))
            span_end = air_end + timeout_extra
            _overhear(waiting, m, t_tx, air_end)
            for c in winners:
                _failed_attempt(c, direction, min(span_end, end), timing, rng, done)
            active = waiting + [c for c in winners if c.result is None]
            t = min(span_end, end)
            continue

        c = winners[0]
        span_end, air_end = _exchange(c, direction, t_tx, book, rng, per, stats, owner, log)
        _overhear(waiting, m, t_tx, air_end)
        if c.result is None:
            if _acked(c):
                _finish(c, direction, "acked", span_end, done, timing.cw_min)
            else:
                _failed_attempt(c, direction, min(span_end, end), timing, rng, done)
                if not contention and c.result is None:
                    _finish(c, direction, "deferred", min(span_end, end), done, timing.cw_min)
        active = waiting + ([c] if c.result is None else [])
        t = min(span_end, end)

    return [c.result for c in done]


def _overhear(waiting, m, t_tx, air_end):
    for c in waiting:
        _ev(c.st, _TICK, t_tx, slots=m)
        _ev(c.st, _RX_START, t_tx)
        _ev(c.st, _RX_END, air_end, pending=True)


def _exchange(c: _Contender, direction, t0, book, rng, per, stats, owner, log):
    """Run the frame sequence; returns (end of the medium-busy span, end of last frame on air)."""
    st = c.st
    sifs = book.timing.sifs
    t = t0
    last = len(c.steps) - 1
    for i, step in enumerate(c.steps):
        fe = t + step.duration
        ok = rng.random() >= per
        if not ok:
            stats.corrupted += 1
        more = ok and i < last
        if step.sender == "sta":
            if st.radio is not Radio.TRANSMITTING:
                _ev(st, _TX_START, t)
            _ev(st, _TX_END, fe, pending=True)
            src, dst = st.aid.raw, AP
        else:
            _ev(st, _RX_START, t)
            _ev(st, _RX_END, fe, pending=True)
            src, dst = AP, st.aid.raw
        if log:
            log(FrameRecord(t, fe, src, dst, step.kind.value, "ok" if ok else "corrupted",
                            direction.value, owner))
        if not ok:
            if step.sender == "sta":
                return fe + sifs + book.profile.preamble_duration, fe
            return fe, fe
        if step.delivers is not None and step.delivers.delivered_at is None:
            step.delivers.delivered_at = fe
        if step.acks is not None:
            c.acked_flags.add(id(step.acks))
        if more:
            t = fe + sifs
    return fe, fe


def _acked(c: _Contender) -> bool:
    return id(c.packet) in c.acked_flags


def _failed_attempt(c: _Contender, direction, t_end, timing: MacTiming, rng, done):
    st = c.st
    st.retries = c.packet.attempts
    if c.packet.attempts >= timing.retry_limit:
        _finish(c, direction, "dropped", t_end, done, timing.cw_min)
        return
    st.cw = next_cw(st.cw, timing.cw_max)
    st.backoff = dcf_draw_backoff(rng, st.cw)


def _finish(c: _Contender, direction, outcome, t_end, done, cw_min):
    st = c.st
    if st.radio is Radio.RECEIVING:
        _ev(st, _RX_END, t_end, pending=False)
    else:
        _ev(st, _SEG_END, t_end)
    if outcome != "deferred":
        st.cw = cw_min
        st.retries = 0
    extra = []
    if c.reverse is not None and id(c.reverse) in c.acked_flags:
        extra.append(c.reverse)
    c.result = ExchangeResult(st.aid.raw, direction, c.packet, outcome, c.packet.attempts,
                              c.packet.delivered_at, c.collisions, extra)
    done.append(c)



def _ready(queue, cutoff) -> bool:
    return bool(queue) and (cutoff is None or queue[0].generated <= cutoff)


def _run_segment(direction, segment, stations, book, rng, per, base, stats, log, subslot_attr, queue_attr,
                 cutoff):
    results = []
    n = len(segment.subslots) or 1
    for k in range(n):
        lo, hi = segment.slot_bounds(k)
        entries = []
        for st in stations:
            queue = getattr(st, queue_attr)
            if not _ready(queue, cutoff) or (n > 1 and getattr(st, subslot_attr) != k):
                continue
            entry = (st, queue[0])
            if direction is Direction.DL and book.timing.speed_frame_exchange and _ready(st.ul_pending, cutoff):
                entry = (st, queue[0], st.ul_pending[0])
            entries.append(entry)
        if entries:
            owner = segment.owner if n == 1 else SlotOwner(segment.owner, k)
            results.extend(contend(direction, base + lo, base + hi, owner, entries, book, rng, per, stats, log))
    return results


def run_downlink_segment(segment, stations, book: AirtimeBook, rng, per: float, base: int = 0,
                         stats: SegmentStats | None = None, log=None, cutoff: int | None = None
                         ) -> list[ExchangeResult]:
    """PS-Poll retrieval for signaled stations of one group inside a DL segment.

    ``base`` is the absolute time of the cycle start; segment bounds are offsets.
    Only stations with buffered downlink data contend, each within its sub-slot;
    with ``cutoff`` set, only packets generated no later than it are served.
    """
    return _run_segment(Direction.DL, segment, stations, book, rng, per, base, stats, log,
                        "subslot_dl", "dl_pending", cutoff)


def run_uplink_segment(segment, stations, book: AirtimeBook, rng, per: float, base: int = 0,
                       stats: SegmentStats | None = None, log=None, cutoff: int | None = None
                       ) -> list[ExchangeResult]:
    """RTS/CTS uplink delivery for stations of one group inside a UL segment."""
    return _run_segment(Direction.UL, segment, stations, book, rng, per, base, stats, log,
                        "subslot_ul", "ul_pending", cutoff)
