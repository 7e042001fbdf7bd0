"""Scenario configuration: dataclasses, YAML (de)serialization and overrides.

A scenario file is one YAML mapping. Unknown keys are rejected so that typos
in hand-written files or ``--set`` overrides surface immediately.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import yaml

from .aid import MAX_AID, GroupingPolicy, SignalingMode, N_BLOCKS, N_PAGES
from .energy import BatterySpec, DEFAULT_BATTERIES, REFERENCE_BATTERY, RadioPowerProfile
from .errors import AhSimError, ConfigInvalid, ParseError, UnknownScenario
from .phy import MCS_TABLE_1MHZ, MCS_TABLE_2MHZ, PhyProfile, coverage_radius

SCHEMA_VERSION = 1
BUILTIN_SCENARIOS = ("agriculture", "smart-metering", "industrial", "animal")


@dataclass
class TrafficConfig:
    ul_interarrival: float = 120.0  # s
    dl_interarrival: float = 240.0  # s
    multicast_interarrival: Optional[float] = None  # s, None disables broadcast traffic
    payload_bytes: int = 100


@dataclass
class GroupingConfig:
    signaling: str = "non-tim-offset"
    policy: str = "dense"
    # round-robin layout: number of pages and blocks stations are dealt across
    pages: Optional[int] = None
    blocks: Optional[int] = None
    tim_interval_us: int = 200_000
    subslots_dl: int = 1
    subslots_ul: int = 1
    # fraction of each TIM interval's post-beacon time given to RAW segments
    raw_share: float = 1.0


@dataclass
class PhyConfig:
    environment: str = "outdoor"
    channel_width: int = 2
    tx_power: float = 30.0
    noise_floor: float = -104.0
    mcs_table: Optional[tuple] = None  # ((kbps, dBm), ...); None picks the table for channel_width
    preamble_duration: int = 240
    per: float = 0.10
    path_loss_model: Optional[tuple] = None  # (intercept dB, slope dB/decade)

    def profile(self) -> PhyProfile:
        table = self.mcs_table
        if table is None:
            table = MCS_TABLE_1MHZ if self.channel_width == 1 else MCS_TABLE_2MHZ
        return PhyProfile(self.environment, self.channel_width, self.tx_power, self.noise_floor,
                          table, self.preamble_duration, self.per, self.path_loss_model)


@dataclass
class MacConfig:
    slot: int = 52
    sifs: int = 160
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: int = 7
    ndp_control: bool = True
    rts_cts_uplink: bool = True
    speed_frame_exchange: bool = False
    drift_ppm: float = 20.0
    # listen to one DTIM beacon out of every doze_cycles
    doze_cycles: int = 1
    # rate for beacons and the multicast slot: "min-station" or a kbps value
    beacon_rate: Union[str, int] = "min-station"


@dataclass
class BatteryConfig:
    name: str
    capacity_mah: float


@dataclass
class EnergyConfig:
    i_rx: float = 15.4
    i_tx: float = 16.9
    i_idle: float = 1.7
    i_sleep: float = 0.0004
    voltage: float = 3.0
    batteries: tuple = tuple(BatteryConfig(b.name, b.capacity_mah) for b in DEFAULT_BATTERIES)
    reference_battery: str = REFERENCE_BATTERY

    def profile(self) -> RadioPowerProfile:
        return RadioPowerProfile(self.i_rx, self.i_tx, self.i_idle, self.i_sleep, self.voltage)

    def battery_specs(self) -> tuple:
        return tuple(BatterySpec(b.name, b.capacity_mah) for b in self.batteries)


@dataclass
class ScenarioConfig:
    name: str
    n_stations: int
    area_radius: float  # m
    schema_version: int = SCHEMA_VERSION
    description: str = ""
    duration: float = 7200.0  # s
    seed: int = 1
    # the last stations (by index) may be non-TIM or unscheduled; the rest are TIM stations
    non_tim_stations: int = 0
    unscheduled_stations: int = 0
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    grouping: GroupingConfig = field(default_factory=GroupingConfig)
    phy: PhyConfig = field(default_factory=PhyConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)

    @property
    def n_tim(self) -> int:
        return self.n_stations - self.non_tim_stations - self.unscheduled_stations

    def station_kind(self, sid: int) -> str:
        if sid < self.n_tim:
            return "tim"
        if sid < self.n_tim + self.non_tim_stations:
            return "non-tim"
        return "unscheduled"

    def validate(self) -> "ScenarioConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigInvalid(f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})")
        if not 0 <= self.n_stations <= MAX_AID:
            raise ConfigInvalid(f"n_stations={self.n_stations} outside [0, {MAX_AID}]")
        if self.non_tim_stations < 0 or self.unscheduled_stations < 0 or self.n_tim < 0:
            raise ConfigInvalid("non_tim_stations + unscheduled_stations must not exceed n_stations")
        if not self.area_radius > 0:
            raise ConfigInvalid("area_radius must be positive")
        if self.duration < 0:
            raise ConfigInvalid("duration must be non-negative")
        tr = self.traffic
        for key in ("ul_interarrival", "dl_interarrival"):
            if not getattr(tr, key) > 0:
                raise ConfigInvalid(f"traffic.{key} must be positive")
        if tr.multicast_interarrival is not None and not tr.multicast_interarrival > 0:
            raise ConfigInvalid("traffic.multicast_interarrival must be positive or null")
        if tr.payload_bytes <= 0:
            raise ConfigInvalid("traffic.payload_bytes must be positive")
        g = self.grouping
        try:
            SignalingMode(g.signaling)
            policy = GroupingPolicy(g.policy)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        if policy is GroupingPolicy.ROUND_ROBIN:
            if g.pages is None or g.blocks is None:
                raise ConfigInvalid("round-robin grouping needs grouping.pages and grouping.blocks")
            if not (1 <= g.pages <= N_PAGES and 1 <= g.blocks <= N_BLOCKS):
                raise ConfigInvalid(f"grouping layout {g.pages}x{g.blocks} outside {N_PAGES}x{N_BLOCKS}")
        if g.tim_interval_us <= 0:
            raise ConfigInvalid("grouping.tim_interval_us must be positive")
        if g.subslots_dl < 1 or g.subslots_ul < 1:
            raise ConfigInvalid("sub-slot counts must be >= 1")
        if not 0 < g.raw_share <= 1:
            raise ConfigInvalid("grouping.raw_share must lie in (0, 1]")
        if (self.non_tim_stations or self.unscheduled_stations) and g.raw_share >= 1:
            raise ConfigInvalid("non-TIM and unscheduled stations need raw_share < 1 to leave time outside RAW")
        m = self.mac
        if min(m.slot, m.sifs) <= 0 or m.cw_min < 0 or m.cw_max < m.cw_min or m.retry_limit < 1:
            raise ConfigInvalid("invalid MAC timing (need slot, sifs > 0, 0 <= cw_min <= cw_max, retry_limit >= 1)")
        if m.doze_cycles < 1 or m.drift_ppm < 0:
            raise ConfigInvalid("mac.doze_cycles must be >= 1 and mac.drift_ppm >= 0")
        if not (m.beacon_rate == "min-station" or (isinstance(m.beacon_rate, int) and m.beacon_rate > 0)):
            raise ConfigInvalid(f"mac.beacon_rate must be 'min-station' or a positive kbps value, got {m.beacon_rate!r}")
        try:
            profile = self.phy.profile()
            self.energy.profile()
            specs = self.energy.battery_specs()
        except AhSimError as exc:
            raise ConfigInvalid(str(exc)) from None
        if self.energy.reference_battery not in {b.name for b in specs}:
            raise ConfigInvalid(f"reference battery {self.energy.reference_battery!r} is not in energy.batteries")
        reach = coverage_radius(profile)
        if self.area_radius > reach:
            raise ConfigInvalid(
                f"area_radius {self.area_radius} m exceeds the {reach:.0f} m coverage of the lowest MCS")
        return self


# ---------------------------------------------------------------------------
# dict <-> dataclass


def _is_dataclass_type(tp) -> bool:
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def _coerce(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is Union:
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _coerce(arg, value, path)
            except ConfigInvalid as exc:
                errors.append(str(exc))
        raise ConfigInvalid(errors[0] if errors else f"{path}: invalid value {value!r}")
    if _is_dataclass_type(tp):
        return _from_dict(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigInvalid(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigInvalid(f"{path}: expected a string, got {value!r}")
        return value
    if tp is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigInvalid(f"{path}: expected a list, got {value!r}")
        return tuple(tuple(v) if isinstance(v, (list, tuple)) else v for v in value)
    raise ConfigInvalid(f"{path}: unsupported type {tp!r}")  # pragma: no cover


def _from_dict(cls, data, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigInvalid(f"unknown config key {path + str(key)!r}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigInvalid(f"missing required config key {path + f.name!r}")
            continue
        value = data[f.name]
        if f.name == "batteries" and cls is EnergyConfig:
            if not isinstance(value, list):
                raise ConfigInvalid(f"{path}batteries: expected a list")
            kwargs[f.name] = tuple(_from_dict(BatteryConfig, b, f"{path}batteries.") for b in value)
            continue
        kwargs[f.name] = _coerce(hints[f.name], value, path + f.name)
    try:
        return cls(**kwargs)
    except AhSimError as exc:
        raise ConfigInvalid(str(exc)) from None


def _plain(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def config_to_dict(config: ScenarioConfig) -> dict:
    d = _plain(config)
    # schema_version first for readability
    return {"schema_version": d.pop("schema_version"), **d}


def config_from_dict(data: dict) -> ScenarioConfig:
    return _from_dict(ScenarioConfig, data).validate()


def dump_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None) or getattr(exc, "context_mark", None)
        line = mark.line + 1 if mark else 1
        col = mark.column + 1 if mark else 1
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(f"{source}: {problem}", line, col) from None
    if not isinstance(data, dict):
        raise ParseError(f"{source}: expected a mapping at the top level", 1, 1)
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# overrides and loading


def apply_overrides(config: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply ``key=value`` strings (dotted keys, YAML-typed values)."""
    data = config_to_dict(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigInvalid(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        try:
            value = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError:
            value = raw
        parts = key.split(".")
        node = data
        for i, part in enumerate(parts):
            if not isinstance(node, dict) or part not in node:
                raise ConfigInvalid(f"unknown config key {key!r}")
            if i == len(parts) - 1:
                node[part] = value
            else:
                node = node[part]
    return config_from_dict(data)


def builtin_text(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise UnknownScenario(f"unknown scenario {name!r} (built-in: {', '.join(BUILTIN_SCENARIOS)})")
    return resources.files("ahsim.scenarios").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def load_scenario(name_or_path) -> ScenarioConfig:
    """Built-in scenario by name, or a YAML scenario file by path."""
    key = str(name_or_path)
    if key in BUILTIN_SCENARIOS:
        return parse_config(builtin_text(key), f"<builtin {key}>")
    path = Path(key)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.is_file():
            raise UnknownScenario(f"scenario file {key!r} not found")
        return parse_config(path.read_text(encoding="utf-8"), str(path))
    raise UnknownScenario(f"unknown scenario {key!r} (built-in: {', '.join(BUILTIN_SCENARIOS)})")
