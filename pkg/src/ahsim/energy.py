"""Radio energy accounting and battery lifetime projection.

Times are integer microseconds, currents milliamps, voltage volts. State
transitions are free (no ramp energy).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigInvalid, NoTraffic

HOURS_PER_YEAR = 8760
STATES = ("rx", "tx", "idle", "sleep")


@dataclass(frozen=True)
class RadioPowerProfile:
    """Per-state supply current of a CC1100-class 868 MHz transceiver."""

    i_rx: float = 15.4
    i_tx: float = 16.9
    i_idle: float = 1.7
    i_sleep: float = 0.0004
    voltage: float = 3.0

    def __post_init__(self):
        if min(self.i_rx, self.i_tx, self.i_idle, self.i_sleep, self.voltage) <= 0:
            raise ConfigInvalid("currents and voltage must be positive")
        if not self.i_sleep < self.i_idle < min(self.i_rx, self.i_tx):
            raise ConfigInvalid("expected i_sleep < i_idle < min(i_rx, i_tx)")

    def current(self, state: str) -> float:
        return getattr(self, f"i_{state}")

    def scaled(self, k: float) -> "RadioPowerProfile":
        return RadioPowerProfile(self.i_rx * k, self.i_tx * k, self.i_idle * k, self.i_sleep * k, self.voltage)


@dataclass(frozen=True)
class BatterySpec:
    name: str
    capacity_mah: float

    def __post_init__(self):
        if not self.capacity_mah > 0:
            raise ConfigInvalid(f"battery {self.name!r} needs a positive capacity")


DEFAULT_BATTERIES = (
    BatterySpec("coin-cell", 230.0),
    BatterySpec("AA-pair", 2000.0),
    BatterySpec("D-pair", 12000.0),
)
REFERENCE_BATTERY = "AA-pair"


@dataclass
class EnergyLedger:
    t_rx: int = 0
    t_tx: int = 0
    t_idle: int = 0
    t_sleep: int = 0
    bits_delivered: int = 0

    def __post_init__(self):
        if min(self.t_rx, self.t_tx, self.t_idle, self.t_sleep) < 0:
            raise ValueError("state times must be non-negative")

    @property
    def duration(self) -> int:
        return self.t_rx + self.t_tx + self.t_idle + self.t_sleep

    def share(self, state: str) -> float:
        d = self.duration
        return getattr(self, f"t_{state}") / d if d else 0.0


def _charge(ledger: EnergyLedger, profile: RadioPowerProfile) -> float:
    # mA * us
    return (profile.i_rx * ledger.t_rx + profile.i_tx * ledger.t_tx
            + profile.i_idle * ledger.t_idle + profile.i_sleep * ledger.t_sleep)


def energy_consumed(ledger: EnergyLedger, profile: RadioPowerProfile) -> float:
    """Energy in millijoules."""
    return profile.voltage * _charge(ledger, profile) * 1e-6


def average_current(ledger: EnergyLedger, profile: RadioPowerProfile) -> float:
    """Mean supply current in milliamps over the ledger's duration."""
    d = ledger.duration
    return _charge(ledger, profile) / d if d else 0.0


def energy_per_bit(ledger: EnergyLedger, profile: RadioPowerProfile) -> float:
    """Microjoules per delivered payload bit."""
    if ledger.bits_delivered <= 0:
        raise NoTraffic("no payload bits delivered")
    return energy_consumed(ledger, profile) * 1e3 / ledger.bits_delivered


def battery_lifetime(avg_current_ma: float, battery: BatterySpec) -> float:
    """Years until ``battery`` is exhausted at a constant mean current."""
    if not avg_current_ma > 0:
        raise ValueError("average current must be positive")
    return battery.capacity_mah / avg_current_ma / HOURS_PER_YEAR


def worst_case(ledgers: Sequence[EnergyLedger], profile: RadioPowerProfile) -> int:
    """Index of the ledger with the highest energy (first one on ties)."""
    if not ledgers:
        raise ValueError("empty population")
    best, best_e = 0, energy_consumed(ledgers[0], profile)
    for i in range(1, len(ledgers)):
        e = energy_consumed(ledgers[i], profile)
        if e > best_e:
            best, best_e = i, e
    return best
