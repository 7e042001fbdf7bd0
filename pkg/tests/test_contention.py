import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from ahsim.aid import aid_from_raw
from ahsim.mac.contention import (AirtimeBook, MacTiming, SegmentStats, contend, dcf_draw_backoff, next_cw,
                                  run_downlink_segment, run_uplink_segment)
from ahsim.mac.schedule import Segment, split_even
from ahsim.mac.station import Direction, Packet, Radio, StationState
from ahsim.phy import FrameKind, PhyProfile

PROFILE = PhyProfile()
TIMING = MacTiming()
BOOK = AirtimeBook(PROFILE, TIMING)


class ScriptedRng:
    """Backoffs from a script; every frame is received intact."""

    def __init__(self, backoffs):
        self.backoffs = list(backoffs)
        self.windows = []

    def randint(self, lo, hi):
        self.windows.append(hi)
        return self.backoffs.pop(0)

    def random(self):
        return 0.99


def stations(n, rate=650, direction=Direction.UL, generated=0):
    out = []
    for i in range(n):
        s = StationState(i, aid_from_raw(i + 1), rate=rate, cw=TIMING.cw_min)
        q = s.ul_pending if direction is Direction.UL else s.dl_pending
        q.append(Packet(i, i, direction, generated))
        out.append(s)
    return out


def entries(sts, direction=Direction.UL):
    return [(s, (s.ul_pending if direction is Direction.UL else s.dl_pending)[0]) for s in sts]


def test_backoff_draws():
    assert dcf_draw_backoff(random.Random(1), 0) == 0
    rng = random.Random(7)
    draws = [dcf_draw_backoff(rng, 15) for _ in range(100_000)]
    assert min(draws) == 0 and max(draws) == 15
    assert abs(statistics.fmean(draws) - 7.5) < 0.05
    assert next_cw(15, 1023) == 31
    assert next_cw(511, 1023) == 1023
    assert next_cw(1023, 1023) == 1023


def test_single_downlink_uncontended():
    (s,) = stations(1, direction=Direction.DL)
    res = contend(Direction.DL, 0, 100_000, 0, entries([s], Direction.DL), BOOK, random.Random(3), 0.0)
    assert [r.outcome for r in res] == ["acked"]
    assert 0 < res[0].delivered_at < 100_000
    assert s.radio is Radio.SLEEPING


def test_uplink_airtime_composition():
    (s,) = stations(1)
    rng = ScriptedRng([3])
    log = []
    res = contend(Direction.UL, 1000, 200_000, 0, entries([s]), BOOK, rng, 0.0, log=log.append)
    ctrl = PROFILE.preamble_duration
    data = BOOK.data(650)
    start_tx = 1000 + TIMING.sifs + 2 * TIMING.slot + 3 * TIMING.slot
    assert res[0].delivered_at == start_tx + ctrl + TIMING.sifs + ctrl + TIMING.sifs + data
    ack_end = res[0].delivered_at + TIMING.sifs + ctrl
    assert [r.kind for r in log] == ["rts", "cts", "data", "ack"]
    assert log[0].start == start_tx and log[-1].end == ack_end
    assert s.since == ack_end
    assert s.t_tx == ctrl + data  # RTS + DATA
    assert s.t_rx == 2 * ctrl  # CTS + ACK


def test_equal_backoff_collides_and_doubles_window():
    sts = stations(2)
    rng = ScriptedRng([4, 4, 1, 9])
    stats = SegmentStats()
    res = contend(Direction.UL, 0, 500_000, 0, entries(sts), BOOK, rng, 0.0, stats)
    assert stats.collisions == 1
    assert rng.windows == [15, 15, 31, 31]
    assert all(r.outcome == "acked" and r.collisions == 1 and r.attempts == 2 for r in res)
    # success resets the window
    assert all(s.cw == TIMING.cw_min for s in sts)


def test_retry_limit_drops():
    (s,) = stations(1)
    res = contend(Direction.UL, 0, 10 ** 8, 0, entries([s]), BOOK, random.Random(1), 1.0)
    assert res[0].outcome == "dropped"
    assert res[0].attempts == TIMING.retry_limit == 7
    assert res[0].delivered_at is None


def test_exchange_that_does_not_fit_is_deferred():
    (s,) = stations(1)
    short = BOOK.min_exchange(Direction.UL, 650) - 1
    log = []
    res = contend(Direction.UL, 0, short, 0, entries([s]), BOOK, ScriptedRng([0]), 0.0, log=log.append)
    assert res[0].outcome == "deferred" and res[0].attempts == 0
    assert log == []
    assert s.since <= short and s.radio is Radio.SLEEPING


def test_eight_downlink_stations_frame_error_rate():
    frames = corrupted = 0
    for seed in range(60):
        sts = stations(8, direction=Direction.DL)
        log = []
        res = contend(Direction.DL, 0, 2_000_000, 0, entries(sts, Direction.DL), BOOK, random.Random(seed), 0.1,
                      log=log.append)
        # an exchange whose ACK is lost on every retry still delivered its data
        assert all(r.delivered_at is not None for r in res)
        frames += sum(r.outcome in ("ok", "corrupted") for r in log)
        corrupted += sum(r.outcome == "corrupted" for r in log)
    p = corrupted / frames
    sigma = (0.1 * 0.9 / frames) ** 0.5
    assert abs(p - 0.1) <= 3 * sigma


def test_sixteen_uplink_stations_fit_in_one_segment():
    per_exchange = BOOK.min_exchange(Direction.UL, 650)
    segment = 100 * 16 * per_exchange
    assert segment >= 16 * per_exchange
    for seed in range(10):
        sts = stations(16)
        res = contend(Direction.UL, 0, segment, 0, entries(sts), BOOK, random.Random(seed), 0.0)
        assert sorted(r.outcome for r in res) == ["acked"] * 16


def test_speed_frame_exchange_carries_uplink_packet():
    timing = MacTiming(speed_frame_exchange=True)
    book = AirtimeBook(PROFILE, timing)
    (s,) = stations(1, direction=Direction.DL)
    s.ul_pending.append(Packet(99, 0, Direction.UL, 0))
    log = []
    res = run_downlink_segment(Segment("dl", 0, 0, 100_000), [s], book, random.Random(1), 0.0, log=log.append)
    assert [r.kind for r in log] == ["ps-poll", "data", "data", "ack"]
    assert res[0].outcome == "acked" and res[0].extra == [s.ul_pending[0]]
    assert s.ul_pending[0].delivered


def test_legacy_control_frames_lengthen_exchange():
    legacy = AirtimeBook(PROFILE, MacTiming(ndp_control=False))
    assert legacy.min_exchange(Direction.UL, 650) > BOOK.min_exchange(Direction.UL, 650)
    assert legacy.control(FrameKind.RTS, 650) > PROFILE.preamble_duration


def test_tdma_subslots_never_collide():
    n = 8
    for seed in range(100):
        sts = stations(n)
        for k, s in enumerate(sts):
            s.subslot_ul = k
        seg = Segment("ul", 0, 0, 160_000, split_even(0, 160_000, n))
        stats = SegmentStats()
        res = run_uplink_segment(seg, sts, BOOK, random.Random(seed), 0.1, stats=stats)
        assert stats.collisions == 0
        assert len(res) == n


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(2_000, 300_000), st.sampled_from([0.0, 0.1, 0.5]),
       st.integers(0, 2 ** 32), st.sampled_from(list(Direction)))
def test_frames_stay_inside_segment_and_time_is_conserved(n, length, per, seed, direction):
    sts = stations(n, direction=direction)
    start = 7_000
    log = []
    res = contend(direction, start, start + length, 0, entries(sts, direction), BOOK, random.Random(seed), per,
                  log=log.append)
    assert len(res) == n
    assert all(start <= r.start < r.end <= start + length for r in log)
    assert [r.start for r in log] == sorted(r.start for r in log)
    for s in sts:
        assert s.radio is Radio.SLEEPING
        assert s.since <= start + length
        assert s.t_rx + s.t_tx + s.t_idle + s.t_sleep == s.since
        assert s.t_sleep == start
