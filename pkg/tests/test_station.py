import pytest
from hypothesis import given, strategies as st

from ahsim.aid import aid_from_raw
from ahsim.errors import IllegalTransition
from ahsim.mac.station import PowerEvent, PowerEventKind as K, Radio, StationState, advance_power_state, fast_forward


def fresh():
    return StationState(0, aid_from_raw(1))


def total(st):
    return st.t_rx + st.t_tx + st.t_idle + st.t_sleep


def test_beacon_wakes_sleeping_station():
    st = fresh()
    advance_power_state(st, PowerEvent(K.BEACON_DUE, 100))
    assert st.radio is Radio.RECEIVING and st.t_sleep == 100


def test_overheard_frame_end_without_role_sleeps():
    st = fresh()
    advance_power_state(st, PowerEvent(K.SEGMENT_START, 10))
    advance_power_state(st, PowerEvent(K.RX_START, 20))
    advance_power_state(st, PowerEvent(K.RX_END, 50, pending_role=False))
    assert st.radio is Radio.SLEEPING
    assert (st.t_sleep, st.t_idle, st.t_rx) == (10, 10, 30)


def test_backoff_reaching_zero_transmits():
    st = fresh()
    st.backoff = 3
    advance_power_state(st, PowerEvent(K.SEGMENT_START, 0))
    advance_power_state(st, PowerEvent(K.BACKOFF_TICK, 52, slots=1))
    assert st.radio is Radio.IDLE and st.backoff == 2
    advance_power_state(st, PowerEvent(K.BACKOFF_TICK, 156, slots=2))
    assert st.radio is Radio.TRANSMITTING
    advance_power_state(st, PowerEvent(K.TX_END, 400))
    assert st.radio is Radio.SLEEPING and st.t_tx == 244 and st.t_idle == 156


@pytest.mark.parametrize("events", [
    [PowerEvent(K.TX_START, 5)],
    [PowerEvent(K.RX_END, 5)],
    [PowerEvent(K.BEACON_DUE, 5), PowerEvent(K.BEACON_DUE, 6)],
    [PowerEvent(K.SEGMENT_START, 5), PowerEvent(K.BACKOFF_TICK, 7, slots=1)],
    [PowerEvent(K.SEGMENT_START, 5), PowerEvent(K.SEGMENT_START, 3)],
    [PowerEvent(K.DOZE_START, 5, until=100), PowerEvent(K.BEACON_DUE, 50)],
    [PowerEvent(K.DOZE_END, 5)],
])
def test_illegal_sequences(events):
    st = fresh()
    with pytest.raises(IllegalTransition):
        for ev in events:
            advance_power_state(st, ev)


def test_long_doze_skips_beacons_until_wake():
    st = fresh()
    advance_power_state(st, PowerEvent(K.DOZE_START, 0, until=1000))
    advance_power_state(st, PowerEvent(K.DOZE_END, 1000))
    advance_power_state(st, PowerEvent(K.BEACON_DUE, 1000))
    assert st.radio is Radio.RECEIVING and st.t_sleep == 1000


def test_fast_forward():
    st = fresh()
    fast_forward(st, 10_000, 300)
    assert (st.t_rx, st.t_sleep, st.since) == (300, 9_700, 10_000)
    with pytest.raises(IllegalTransition):
        fast_forward(st, 10_100, 200)


def _legal_next(st, rng_choice, t):
    """A legal event for the station's current state."""
    r = st.radio
    if r is Radio.SLEEPING:
        return rng_choice([PowerEvent(K.BEACON_DUE, t), PowerEvent(K.SEGMENT_START, t)])
    if r is Radio.RECEIVING:
        return rng_choice([PowerEvent(K.RX_END, t, True), PowerEvent(K.RX_END, t, False)])
    if r is Radio.TRANSMITTING:
        return rng_choice([PowerEvent(K.TX_END, t, True), PowerEvent(K.TX_END, t, False)])
    opts = [PowerEvent(K.RX_START, t), PowerEvent(K.TX_START, t), PowerEvent(K.SEGMENT_END, t)]
    if st.backoff:
        opts.append(PowerEvent(K.BACKOFF_TICK, t, slots=1))
    return rng_choice(opts)


@given(st.data())
def test_time_conservation_under_random_walks(data):
    s = fresh()
    s.backoff = 10 ** 6
    t = 0
    for _ in range(data.draw(st.integers(0, 60))):
        t += data.draw(st.integers(0, 10_000))
        ev = _legal_next(s, lambda xs: data.draw(st.sampled_from(xs)), t)
        advance_power_state(s, ev)
        assert total(s) == s.since == t
