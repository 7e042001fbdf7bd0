"""Periodic traffic sources with random phase, merged into one arrival stream."""
from __future__ import annotations

import heapq
from typing import Iterator, NamedTuple

from .errors import ConfigInvalid
from .mac.station import Direction

US_PER_S = 1_000_000
MULTICAST = -1  # station id used for broadcast arrivals


class Arrival(NamedTuple):
    time: int  # us
    sid: int  # station index, or MULTICAST
    direction: Direction


def _seconds_to_us(value, what: str) -> int:
    if value is None or not value > 0:
        raise ConfigInvalid(f"{what} must be positive, got {value!r}")
    us = round(value * US_PER_S)
    if us <= 0:
        raise ConfigInvalid(f"{what}={value!r} s rounds to zero microseconds")
    return us


def _periodic(sid: int, direction: Direction, phase: int, period: int, duration: int,
              cap_interval: int | None):
    last_window = None
    t = phase
    while t < duration:
        window = t // cap_interval if cap_interval else None
        # at most one packet per direction in any DTIM interval
        if window is None or window != last_window:
            last_window = window
            yield Arrival(t, sid, direction)
        t += period


def generate_traffic(config, rng, dtim_interval: int | None = None,
                     horizon: int | None = None) -> Iterator[Arrival]:
    """Lazy, time-ordered arrivals for every station over ``config.duration``.

    Each station gets an uplink and (unless it is unscheduled) a downlink
    source, each periodic with a phase drawn uniformly from ``[0, period)``.
    Phases are drawn in station order, uplink first, so the stream depends only
    on the config and the generator state. Ties are ordered by station id with
    downlink first. ``horizon`` (us) overrides the config duration.
    """
    tr = config.traffic
    ul = _seconds_to_us(tr.ul_interarrival, "ul_interarrival")
    dl = _seconds_to_us(tr.dl_interarrival, "dl_interarrival")
    mc = _seconds_to_us(tr.multicast_interarrival, "multicast_interarrival") \
        if tr.multicast_interarrival is not None else None
    duration = round(config.duration * US_PER_S) if horizon is None else horizon
    if duration < 0:
        raise ConfigInvalid("duration must be non-negative")

    sources = []
    for sid in range(config.n_stations):
        ul_phase = rng.randrange(ul)
        dl_phase = rng.randrange(dl)
        sources.append(_periodic(sid, Direction.UL, ul_phase, ul, duration, dtim_interval))
        if config.station_kind(sid) != "unscheduled":
            sources.append(_periodic(sid, Direction.DL, dl_phase, dl, duration, dtim_interval))
    if mc is not None:
        sources.append(_periodic(MULTICAST, Direction.DL, rng.randrange(mc), mc, duration, dtim_interval))
    # Direction.DL < Direction.UL as strings, so a tie puts downlink first
    return heapq.merge(*sources)
