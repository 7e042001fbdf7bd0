import itertools

import pytest
from hypothesis import given, strategies as st

from ahsim.aid import (MAX_AID, DtimBitmap, GroupingPolicy, SignalingMode, TimBitmap, aid_from_raw, assign_aids,
                       bitmap_hex, build_beacon_sequence, decode_aid, encode_aid, interval_owner,
                       station_may_sleep)
from ahsim.errors import CapacityExceeded, MissingTim, OffsetOverflow, OutOfRange, ZeroAid

pages = st.integers(0, 3)
blocks = st.integers(0, 31)
octets = st.integers(0, 7)


def test_encode_examples():
    assert encode_aid(0, 0, 0, 1).raw == 1
    assert encode_aid(3, 31, 7, 7).raw == 8191 == 2 ** 13 - 1
    assert encode_aid(1, 6, 0, 2).raw == 1 * 2048 + 6 * 64 + 0 * 8 + 2 == 2434


def test_decode_examples():
    assert decode_aid(1) == (0, 0, 0, 1)
    assert decode_aid(8191) == (3, 31, 7, 7)
    assert decode_aid(2434) == (1, 6, 0, 2)


def test_round_trip_exhaustive():
    for raw in range(1, MAX_AID + 1):
        p, b, s, i = decode_aid(raw)
        assert raw == p * 2048 + b * 64 + s * 8 + i
        assert encode_aid(p, b, s, i).raw == raw


@given(pages, blocks, octets, octets)
def test_decode_inverts_encode(p, b, s, i):
    if (p, b, s, i) == (0, 0, 0, 0):
        with pytest.raises(ZeroAid):
            encode_aid(p, b, s, i)
    else:
        assert decode_aid(encode_aid(p, b, s, i).raw) == (p, b, s, i)


@pytest.mark.parametrize("args", [(4, 0, 0, 1), (0, 32, 0, 1), (0, 0, 8, 1), (0, 0, 0, 8), (-1, 0, 0, 1)])
def test_encode_out_of_range(args):
    with pytest.raises(OutOfRange):
        encode_aid(*args)


@pytest.mark.parametrize("raw", [0, -3, 8192, 10 ** 6])
def test_decode_out_of_range(raw):
    with pytest.raises(OutOfRange):
        decode_aid(raw)


def test_assign_aids_examples():
    assert [a.raw for a in assign_aids(1)] == [1]
    full = assign_aids(8191)
    assert sorted(a.raw for a in full) == list(range(1, 8192))
    agri = assign_aids(3500)
    assert len({a.raw for a in agri}) == 3500
    assert max(a.raw for a in agri) == 3500
    assert {a.page for a in agri} == {0, 1}
    with pytest.raises(CapacityExceeded):
        assign_aids(8192)


@given(st.integers(0, 500))
def test_dense_packing_is_monotone(n):
    small = {a.raw for a in assign_aids(n)}
    assert small <= {a.raw for a in assign_aids(n + 1)}


@given(st.integers(1, 2000), st.integers(1, 4), st.integers(1, 32))
def test_round_robin_balances_groups(n, pages_, blocks_):
    capacity = pages_ * blocks_ * 64 - 1
    if n > capacity:
        with pytest.raises(CapacityExceeded):
            assign_aids(n, GroupingPolicy.ROUND_ROBIN, (pages_, blocks_))
        return
    aids = assign_aids(n, GroupingPolicy.ROUND_ROBIN, (pages_, blocks_))
    assert len({a.raw for a in aids}) == n
    assert aids == sorted(aids)
    sizes = {}
    for a in aids:
        assert a.page < pages_ and a.block < blocks_
        sizes[a.group] = sizes.get(a.group, 0) + 1
    if n >= pages_ * blocks_:
        assert max(sizes.values()) - min(sizes.values()) <= 1


def _sleep_oracle(group_bit, station_bit, has_uplink):
    # asleep unless it has uplink data or its own downlink data is announced
    if has_uplink:
        return False
    if not group_bit:
        return True
    return not station_bit


@pytest.mark.parametrize("group_bit,station_bit,has_uplink,mode",
                         list(itertools.product([False, True], [False, True], [False, True],
                                                list(SignalingMode))))
def test_sleep_rule_truth_table(group_bit, station_bit, has_uplink, mode):
    me = encode_aid(1, 6, 0, 2)
    sibling = encode_aid(1, 6, 0, 3)
    pending = []
    if group_bit:
        pending = [me] if station_bit else [sibling]
    beacons = build_beacon_sequence([me.group, (0, 3)], mode, pending)
    dtim = beacons[0].dtim
    tim = next(t for b in beacons[1:] for t in b.tims if t.group == me.group)
    if station_bit and not group_bit:
        # a stale TIM naming the station must not matter when the group bit is clear
        tim = TimBitmap(me.group, frozenset({(me.subblock, me.index)}))
    assert dtim.has_group(me.group) == group_bit
    assert station_may_sleep(me, dtim, tim, has_uplink) == _sleep_oracle(group_bit, station_bit, has_uplink)


def test_sleep_rule_examples():
    me = encode_aid(0, 7, 0, 1)
    assert station_may_sleep(me, DtimBitmap(), None, False)
    signaled = DtimBitmap(frozenset({me.group}))
    assert not station_may_sleep(me, signaled, TimBitmap(me.group, frozenset({(0, 1)})), False)
    assert not station_may_sleep(me, DtimBitmap(), None, True)
    with pytest.raises(MissingTim):
        station_may_sleep(me, signaled, None, False)


def test_beacon_counts():
    one_page = [(0, b) for b in range(8)]
    seq = build_beacon_sequence(one_page, SignalingMode.NON_TIM_OFFSET, [])
    assert [b.kind for b in seq] == ["dtim"] + ["tim"] * 8

    two_pages = [(p, b) for p in range(2) for b in range(8)]
    seq = build_beacon_sequence(two_pages, SignalingMode.NON_TIM_OFFSET, [])
    assert len(seq) == 9
    assert all(len(b.tims) == 2 for b in seq[1:])

    seq = build_beacon_sequence(two_pages, SignalingMode.TIM_OFFSET, [])
    assert len(seq) == 1 + 2 * 8
    assert all(len(b.tims) == 1 for b in seq[1:])
    assert sorted(seq[0].dtim.tim_offsets.values()) == list(range(16))


def test_tim_offset_overflow():
    groups = [(p, b) for p in range(2) for b in range(17)]
    with pytest.raises(OffsetOverflow):
        build_beacon_sequence(groups, SignalingMode.TIM_OFFSET, [])
    build_beacon_sequence(groups, SignalingMode.NON_TIM_OFFSET, [])


@given(st.sets(st.integers(1, MAX_AID), max_size=40), st.sampled_from(list(SignalingMode)))
def test_signaling_completeness(raws, mode):
    aids = [aid_from_raw(r) for r in raws]
    groups = {a.group for a in aids} | {(0, 0)}
    if mode is SignalingMode.TIM_OFFSET and len(groups) > 32:
        return
    seq = build_beacon_sequence(groups, mode, aids)
    dtim = seq[0].dtim
    for a in aids:
        assert dtim.has_group(a.group)
        hits = [t for b in seq[1:] for t in b.tims if t.has(a)]
        assert len(hits) == 1
    # and nobody else is paged
    paged = sum(len(t.pending_stations) for b in seq[1:] for t in b.tims)
    assert paged == len(aids)


def test_interval_owner_by_mode():
    a = encode_aid(2, 5, 1, 1)
    assert interval_owner(a, SignalingMode.NON_TIM_OFFSET) == 5
    assert interval_owner(a, SignalingMode.TIM_OFFSET) == (2, 5)


def test_bitmap_hex_msb_is_lowest_ordinal():
    assert bitmap_hex([0], 8) == "80"
    assert bitmap_hex([7], 8) == "01"
    assert bitmap_hex([0, 63], 64) == "8000000000000001"
    seq = build_beacon_sequence([(0, 0), (0, 31)], SignalingMode.NON_TIM_OFFSET,
                                [aid_from_raw(1), aid_from_raw(8)])
    assert seq[0].dtim.hex() == "80000000000000000000000000000000"
    assert seq[1].tims[0].hex() == "4080000000000000"
    with pytest.raises(OutOfRange):
        bitmap_hex([8], 8)
