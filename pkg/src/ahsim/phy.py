"""Abstract sub-1 GHz PHY: path loss, rate staircase, airtime and frame errors."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import NonPositiveDistance, OutOfRange

FCS_BYTES = 4
SHORT_MAC_HEADER_BYTES = 18
DATA_PAYLOAD_BYTES = 100

# (intercept dB, dB per decade of distance in metres)
PATH_LOSS_MODELS = {
    "outdoor": (8.0, 37.6),
    "indoor": (38.0, 30.0),
}

# (rate kbps, minimum rx power dBm), ascending by rate
MCS_TABLE_2MHZ = ((650, -92.0), (1300, -89.0), (1950, -86.0), (2600, -83.0))
# 1 MHz channels gain 3 dB of sensitivity; 150 kbps is the repetition mode
MCS_TABLE_1MHZ = ((150, -98.0), (300, -95.0), (600, -92.0), (900, -89.0))


class Outcome(str, enum.Enum):
    OK = "ok"
    CORRUPTED = "corrupted"


@dataclass(frozen=True)
class PhyProfile:
    environment: str = "outdoor"
    channel_width: int = 2
    tx_power: float = 30.0
    noise_floor: float = -104.0
    mcs_table: tuple = MCS_TABLE_2MHZ
    preamble_duration: int = 240
    per: float = 0.10
    path_loss_model: tuple | None = None

    def __post_init__(self):
        if self.environment not in PATH_LOSS_MODELS:
            raise OutOfRange(f"unknown environment {self.environment!r}")
        if self.channel_width not in (1, 2):
            raise OutOfRange(f"channel width {self.channel_width} MHz not supported (1 or 2)")
        table = tuple((int(r), float(p)) for r, p in self.mcs_table)
        object.__setattr__(self, "mcs_table", table)
        if not table:
            raise OutOfRange("empty MCS table")
        for (r0, p0), (r1, p1) in zip(table, table[1:]):
            if not (r1 > r0 and p1 > p0):
                raise OutOfRange("MCS table must be ascending in rate with strictly increasing thresholds")
        if table[0][0] < 100:
            raise OutOfRange(f"lowest rate {table[0][0]} kbps is below 100 kbps")
        if not 0.0 <= self.per <= 1.0:
            raise OutOfRange(f"per={self.per} outside [0, 1]")
        if self.preamble_duration <= 0:
            raise OutOfRange("preamble duration must be positive")
        if self.path_loss_model is not None:
            object.__setattr__(self, "path_loss_model", tuple(float(x) for x in self.path_loss_model))

    @property
    def rates(self) -> tuple:
        return tuple(r for r, _ in self.mcs_table)

    @property
    def top_rate(self) -> int:
        return self.mcs_table[-1][0]

    @property
    def lowest_rate(self) -> int:
        return self.mcs_table[0][0]


def path_loss(distance: float, environment: str = "outdoor", model: tuple | None = None) -> float:
    """Path loss in dB at ``distance`` metres: intercept + slope * log10(d)."""
    if not distance > 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance!r}")
    intercept, slope = model if model is not None else PATH_LOSS_MODELS[environment]
    return intercept + slope * math.log10(distance)


def rx_power(distance: float, profile: PhyProfile) -> float:
    return profile.tx_power - path_loss(distance, profile.environment, profile.path_loss_model)


def select_rate(distance: float, profile: PhyProfile) -> int:
    """Highest MCS rate whose sensitivity threshold the link budget meets."""
    rx = rx_power(distance, profile)
    best = None
    for rate, threshold in profile.mcs_table:
        if threshold <= rx:
            best = rate
    if best is None:
        raise OutOfRange(
            f"rx power {rx:.1f} dBm at {distance} m is below the lowest MCS threshold "
            f"{profile.mcs_table[0][1]} dBm"
        )
    return best


def coverage_radius(profile: PhyProfile) -> float:
    """Largest distance at which the lowest MCS is still decodable."""
    intercept, slope = profile.path_loss_model or PATH_LOSS_MODELS[profile.environment]
    budget = profile.tx_power - profile.mcs_table[0][1]
    return 10 ** ((budget - intercept) / slope)


class FrameKind(str, enum.Enum):
    DATA = "data"
    PS_POLL = "ps-poll"
    RTS = "rts"
    CTS = "cts"
    ACK = "ack"
    NDP_CTRL = "ndp-ctrl"
    BEACON_DTIM = "beacon-dtim"
    BEACON_TIM = "beacon-tim"


@dataclass(frozen=True)
class FrameSpec:
    kind: FrameKind
    mac_header_bytes: int = 0
    payload_bytes: int = 0
    ndp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", FrameKind(self.kind))
        if self.kind is FrameKind.NDP_CTRL:
            object.__setattr__(self, "ndp", True)

    @property
    def total_bytes(self) -> int:
        return 0 if self.ndp else self.mac_header_bytes + self.payload_bytes + FCS_BYTES


# legacy control frame headers (FCS added separately)
_LEGACY_CONTROL_HEADER = {
    FrameKind.RTS: 16,
    FrameKind.CTS: 10,
    FrameKind.ACK: 10,
    FrameKind.PS_POLL: 16,
}


def data_frame(payload_bytes: int = DATA_PAYLOAD_BYTES) -> FrameSpec:
    return FrameSpec(FrameKind.DATA, SHORT_MAC_HEADER_BYTES, payload_bytes)


def control_frame(kind, ndp: bool = True) -> FrameSpec:
    kind = FrameKind(kind)
    return FrameSpec(kind, _LEGACY_CONTROL_HEADER[kind], 0, ndp=ndp)


def airtime(frame: FrameSpec, rate: float, profile: PhyProfile) -> int:
    """Frame duration in whole microseconds (rounded up)."""
    if not rate > 0:
        raise OutOfRange(f"rate must be positive, got {rate!r}")
    if frame.ndp:
        return profile.preamble_duration
    bits_ms = 8 * frame.total_bytes * 1000
    if isinstance(rate, int):
        body = -(-bits_ms // rate)
    else:
        body = math.ceil(bits_ms / rate)
    return profile.preamble_duration + body


def transmission_outcome(rng, per: float) -> Outcome:
    """Bernoulli frame error; consumes exactly one draw from ``rng``."""
    return Outcome.CORRUPTED if rng.random() < per else Outcome.OK


def rate_staircase(profile: PhyProfile, max_distance: float, step: float = 5.0):
    """(distance, rate) samples up to ``max_distance``; rate 0 beyond coverage."""
    rows = []
    d = step
    while d <= max_distance + 1e-9:
        try:
            rate = select_rate(d, profile)
        except OutOfRange:
            rate = 0
        rows.append((round(d, 6), rate))
        d += step
    return rows
