import math
import random

import pytest
from hypothesis import given, strategies as st

from ahsim.errors import NonPositiveDistance, OutOfRange
from ahsim.phy import (FrameKind, FrameSpec, Outcome, PhyProfile, airtime, control_frame, coverage_radius,
                       data_frame, path_loss, rate_staircase, select_rate, transmission_outcome)

OUTDOOR = PhyProfile()
INDOOR = PhyProfile(environment="indoor")
distances = st.floats(0.5, 5000, allow_nan=False)


def test_path_loss_examples():
    assert path_loss(1, "outdoor") == pytest.approx(8.0)
    assert path_loss(1000, "outdoor") == pytest.approx(8 + 37.6 * 3)
    assert path_loss(10, "indoor") == pytest.approx(38 + 30 * 1)
    with pytest.raises(NonPositiveDistance):
        path_loss(0)


@given(distances, distances)
def test_path_loss_monotone(a, b):
    lo, hi = sorted((a, b))
    assert path_loss(lo) <= path_loss(hi)


def test_select_rate_examples():
    assert select_rate(1e-3, OUTDOOR) == OUTDOOR.top_rate
    # outdoor link budget at 900 m: 30 - (8 + 37.6 log10 900) = -89.08 dBm, just under the 1300 kbps step
    assert 30 - (8 + 37.6 * math.log10(900)) < -89
    assert select_rate(900, OUTDOOR) == OUTDOOR.lowest_rate == 650
    assert 900 < coverage_radius(OUTDOOR)
    with pytest.raises(OutOfRange):
        select_rate(coverage_radius(OUTDOOR) * 1.01, OUTDOOR)


def test_select_rate_step_boundary():
    # the distance where rx power equals the 1300 kbps threshold
    edge = 10 ** ((30 + 89 - 8) / 37.6)
    assert select_rate(edge * 0.999, OUTDOOR) == 1300
    assert select_rate(edge * 1.001, OUTDOOR) == 650


@given(distances, distances)
def test_select_rate_non_increasing(a, b):
    lo, hi = sorted((a, b))
    reach = coverage_radius(INDOOR)
    if hi < reach:
        assert select_rate(lo, INDOOR) >= select_rate(hi, INDOOR)


def test_airtime_examples():
    p = PhyProfile(preamble_duration=560)
    assert airtime(FrameSpec(FrameKind.NDP_CTRL), 650, p) == 560
    assert airtime(data_frame(100), 650, p) == 560 + math.ceil(8 * (18 + 100 + 4) * 1000 / 650) == 2062
    assert airtime(data_frame(100), 1e12, p) == 561  # rounding up leaves one microsecond
    assert airtime(control_frame(FrameKind.ACK), 650, p) == 560


def test_legacy_control_frames_are_longer():
    p = PhyProfile()
    for kind in (FrameKind.RTS, FrameKind.CTS, FrameKind.ACK, FrameKind.PS_POLL):
        assert airtime(control_frame(kind, ndp=False), 650, p) > airtime(control_frame(kind), 650, p)


@given(st.integers(1, 500), st.sampled_from([150, 300, 650, 1300, 1950, 2600]),
       st.sampled_from([150, 300, 650, 1300, 1950, 2600]))
def test_airtime_decreasing_in_rate(payload, r1, r2):
    f = data_frame(payload)
    if r1 < r2:
        assert airtime(f, r1, OUTDOOR) > airtime(f, r2, OUTDOOR)


@given(st.integers(1, 300), st.integers(1, 300))
def test_airtime_additive_in_payload(a, b):
    # body time is 8 bits * bytes / rate; with 1000 kbps that is exactly 8 us per byte
    rate = 1000
    pre = OUTDOOR.preamble_duration
    body = lambda n: airtime(data_frame(n), rate, OUTDOOR) - pre
    assert body(a + b) - body(a) == 8 * b


def test_per_extremes():
    rng = random.Random(5)
    assert all(transmission_outcome(rng, 0.0) is Outcome.OK for _ in range(1000))
    assert all(transmission_outcome(rng, 1.0) is Outcome.CORRUPTED for _ in range(1000))


def test_per_empirical_rate():
    rng = random.Random(2024)
    n = 100_000
    bad = sum(transmission_outcome(rng, 0.1) is Outcome.CORRUPTED for _ in range(n))
    sigma = math.sqrt(0.1 * 0.9 / n)
    assert abs(bad / n - 0.1) <= 3 * sigma
    assert abs(bad / n - 0.1) <= 0.003


@pytest.mark.parametrize("kwargs", [
    dict(mcs_table=((650, -83.0), (1300, -92.0))),
    dict(mcs_table=((50, -95.0), (650, -92.0))),
    dict(per=1.5),
    dict(environment="underwater"),
    dict(channel_width=4),
])
def test_invalid_profiles(kwargs):
    with pytest.raises(OutOfRange):
        PhyProfile(**kwargs)


def test_one_mhz_table_reaches_further():
    assert coverage_radius(PhyProfile(channel_width=1, mcs_table=((150, -98.0), (300, -95.0)))) > \
        coverage_radius(OUTDOOR)


def test_rate_staircase_shape():
    rows = rate_staircase(OUTDOOR, 1500, 50)
    rates = [r for _, r in rows]
    assert rates == sorted(rates, reverse=True)
    assert set(rates) == {2600, 1950, 1300, 650, 0}
