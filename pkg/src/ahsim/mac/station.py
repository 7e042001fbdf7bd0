"""Per-station MAC state and the four-state radio model."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from ..aid import Aid
from ..energy import EnergyLedger
from ..errors import IllegalTransition


class Radio(str, enum.Enum):
    RECEIVING = "receiving"
    TRANSMITTING = "transmitting"
    IDLE = "idle"
    SLEEPING = "sleeping"


class StationKind(str, enum.Enum):
    TIM = "tim"
    NON_TIM = "non-tim"
    UNSCHEDULED = "unscheduled"


class Direction(str, enum.Enum):
    DL = "DL"
    UL = "UL"


class PowerEventKind(str, enum.Enum):
    BEACON_DUE = "beacon_due"
    RX_START = "rx_start"
    RX_END = "rx_end"
    TX_START = "tx_start"
    TX_END = "tx_end"
    BACKOFF_TICK = "backoff_tick"
    SEGMENT_START = "segment_start"
    SEGMENT_END = "segment_end"
    DOZE_START = "doze_start"
    DOZE_END = "doze_end"


class PowerEvent(NamedTuple):
    kind: PowerEventKind
    time: int
    # rx_end / tx_end: stay awake afterwards (the station still has a role)
    pending_role: bool = False
    # backoff_tick: slots counted down
    slots: int = 0
    # doze_start: wake-up time
    until: int | None = None


@dataclass(slots=True, eq=False)
class Packet:
    pid: int
    sid: int
    direction: Direction
    generated: int
    delivered_at: int | None = None
    attempts: int = 0

    @property
    def delivered(self) -> bool:
        return self.delivered_at is not None


@dataclass(slots=True, eq=False)
class StationState:
    sid: int
    aid: Aid
    kind: StationKind = StationKind.TIM
    rate: int = 0
    distance: float = 0.0
    owner: object = None
    radio: Radio = Radio.SLEEPING
    since: int = 0
    t_rx: int = 0
    t_tx: int = 0
    t_idle: int = 0
    t_sleep: int = 0
    backoff: int = 0
    cw: int = 15
    retries: int = 0
    dl_pending: deque = field(default_factory=deque)
    ul_pending: deque = field(default_factory=deque)
    long_doze_until: int | None = None
    bits_delivered: int = 0
    # last DTIM cycle whose radio time has been attributed
    synced_cycle: int = -1
    subslot_dl: int = 0
    subslot_ul: int = 0
    doze_phase: int = 0

    def ledger(self) -> EnergyLedger:
        return EnergyLedger(self.t_rx, self.t_tx, self.t_idle, self.t_sleep, self.bits_delivered)


_ACCUMULATOR = {
    Radio.RECEIVING: "t_rx",
    Radio.TRANSMITTING: "t_tx",
    Radio.IDLE: "t_idle",
    Radio.SLEEPING: "t_sleep",
}

_AWAKE = (Radio.IDLE, Radio.RECEIVING)


def _attribute(st: StationState, t: int) -> None:
    dt = t - st.since
    if dt < 0:
        raise IllegalTransition(f"station {st.aid.raw}: event at {t} precedes last transition at {st.since}")
    if dt:
        name = _ACCUMULATOR[st.radio]
        setattr(st, name, getattr(st, name) + dt)
    st.since = t


def _illegal(st: StationState, ev: PowerEvent):
    raise IllegalTransition(f"station {st.aid.raw}: {ev.kind.value} while {st.radio.value} at t={ev.time}")


def advance_power_state(st: StationState, ev: PowerEvent) -> StationState:
    """Apply one radio event, attributing the elapsed time to the state being left."""
    kind = ev.kind
    radio = st.radio
    if kind is PowerEventKind.BEACON_DUE:
        if radio not in (Radio.SLEEPING, Radio.IDLE):
            _illegal(st, ev)
        if st.long_doze_until is not None and ev.time < st.long_doze_until:
            raise IllegalTransition(
                f"station {st.aid.raw}: beacon at {ev.time} during long doze until {st.long_doze_until}")
        _attribute(st, ev.time)
        st.radio = Radio.RECEIVING
    elif kind is PowerEventKind.RX_START:
        if radio is not Radio.IDLE:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.RECEIVING
    elif kind is PowerEventKind.RX_END:
        if radio is not Radio.RECEIVING:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.IDLE if ev.pending_role else Radio.SLEEPING
    elif kind is PowerEventKind.TX_START:
        if radio is not Radio.IDLE:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.TRANSMITTING
    elif kind is PowerEventKind.TX_END:
        if radio is not Radio.TRANSMITTING:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.IDLE if ev.pending_role else Radio.SLEEPING
    elif kind is PowerEventKind.BACKOFF_TICK:
        if radio is not Radio.IDLE or ev.slots < 0 or ev.slots > st.backoff:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.backoff -= ev.slots
        if st.backoff == 0:
            st.radio = Radio.TRANSMITTING
    elif kind is PowerEventKind.SEGMENT_START:
        if radio not in (Radio.SLEEPING, Radio.IDLE):
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.IDLE
    elif kind is PowerEventKind.SEGMENT_END:
        if radio is Radio.TRANSMITTING:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.SLEEPING
    elif kind is PowerEventKind.DOZE_START:
        if radio not in (Radio.SLEEPING, Radio.IDLE) or ev.until is None or ev.until < ev.time:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.radio = Radio.SLEEPING
        st.long_doze_until = ev.until
    elif kind is PowerEventKind.DOZE_END:
        if radio is not Radio.SLEEPING or st.long_doze_until is None:
            _illegal(st, ev)
        _attribute(st, ev.time)
        st.long_doze_until = None
    else:  # pragma: no cover
        _illegal(st, ev)
    return st


def fast_forward(st: StationState, until: int, rx_us: int) -> StationState:
    """Account a stretch of beacon-only duty cycling in one step.

    Equivalent to a sequence of beacon_due/rx_end pairs totalling ``rx_us`` of
    reception, with the station asleep for the remainder of ``[since, until)``.
    """
    if st.radio is not Radio.SLEEPING:
        raise IllegalTransition(f"station {st.aid.raw}: fast-forward while {st.radio.value}")
    span = until - st.since
    if span < 0 or rx_us < 0 or rx_us > span:
        raise IllegalTransition(f"station {st.aid.raw}: cannot fit {rx_us} us of rx into {span} us")
    st.t_rx += rx_us
    st.t_sleep += span - rx_us
    st.since = until
    return st
