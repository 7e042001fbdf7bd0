import math

import pytest
from hypothesis import given, strategies as st

from ahsim.energy import (BatterySpec, EnergyLedger, RadioPowerProfile, average_current, battery_lifetime,
                          energy_consumed, energy_per_bit, worst_case)
from ahsim.errors import ConfigInvalid, NoTraffic

P = RadioPowerProfile()
times = st.integers(0, 10 ** 12)
ledgers = st.builds(EnergyLedger, times, times, times, times, st.integers(0, 10 ** 6))


def test_all_sleep():
    t = 3_600_000_000
    e = energy_consumed(EnergyLedger(t_sleep=t), P)
    assert e == pytest.approx(P.voltage * P.i_sleep * t * 1e-6)


def test_equal_shares():
    t = 1_000_000
    led = EnergyLedger(t, t, t, t)
    total = 4 * t
    expected = P.voltage * total * (P.i_rx + P.i_tx + P.i_idle + P.i_sleep) / 4 * 1e-6
    assert energy_consumed(led, P) == pytest.approx(expected)
    assert average_current(led, P) == pytest.approx((P.i_rx + P.i_tx + P.i_idle + P.i_sleep) / 4)


def test_energy_per_bit():
    led = EnergyLedger(t_rx=1000, t_tx=2000, t_sleep=10 ** 6, bits_delivered=800)
    mj = 3.0 * (15.4 * 1000 + 16.9 * 2000 + 0.0004 * 10 ** 6) * 1e-6
    assert energy_per_bit(led, P) == pytest.approx(mj * 1e3 / 800)
    doubled = EnergyLedger(1000, 2000, 0, 10 ** 6, 1600)
    assert energy_per_bit(doubled, P) == pytest.approx(energy_per_bit(led, P) / 2)
    with pytest.raises(NoTraffic):
        energy_per_bit(EnergyLedger(t_sleep=5), P)


def test_battery_lifetime_examples():
    aa = BatterySpec("AA-pair", 2000)
    years = battery_lifetime(0.0126, aa)
    assert years == pytest.approx(2000 / 0.0126 / 8760)
    assert years == pytest.approx(18.1, abs=0.05)
    assert battery_lifetime(0.0126, BatterySpec("half", 1000)) == pytest.approx(years / 2)
    with pytest.raises(ValueError):
        battery_lifetime(0, aa)
    with pytest.raises(ConfigInvalid):
        BatterySpec("empty", 0)


@given(ledgers, st.sampled_from(["t_rx", "t_tx", "t_idle", "t_sleep"]), st.integers(1, 10 ** 9))
def test_energy_strictly_increasing(led, state, extra):
    more = EnergyLedger(**{**led.__dict__, state: getattr(led, state) + extra})
    before, after = energy_consumed(led, P), energy_consumed(more, P)
    increment = P.voltage * P.current(state[2:]) * extra * 1e-6
    if increment > 4 * math.ulp(before):
        assert after > before
    else:
        # below double resolution at this magnitude
        assert after >= before


@given(st.lists(ledgers, min_size=1, max_size=30))
def test_worst_case_is_maximum(pop):
    i = worst_case(pop, P)
    assert energy_consumed(pop[i], P) == max(energy_consumed(l, P) for l in pop)


@given(ledgers, st.floats(0.1, 10))
def test_lifetime_scale_invariance(led, k):
    if led.duration == 0:
        return
    base = battery_lifetime(average_current(led, P), BatterySpec("x", 2000))
    scaled = battery_lifetime(average_current(led, P.scaled(k)), BatterySpec("x", 2000))
    assert scaled == pytest.approx(base / k, rel=1e-9)


def test_profile_ordering_enforced():
    with pytest.raises(ConfigInvalid):
        RadioPowerProfile(i_idle=20.0)
    with pytest.raises(ConfigInvalid):
        RadioPowerProfile(i_sleep=0.0)
