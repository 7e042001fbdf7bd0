"""Run metrics: delivery ratio, delay, channel occupancy and energy summaries."""
from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from .energy import (EnergyLedger, RadioPowerProfile, average_current, battery_lifetime, energy_consumed,
                     energy_per_bit, worst_case)
from .errors import NoDeliveries, NoTraffic, ZeroCapacity
from .mac.station import Direction

US_PER_S = 1_000_000
STATES = ("rx", "tx", "idle", "sleep")


@dataclass
class DirectionStats:
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    # after warm-up
    measured_delivered: int = 0
    delay_sum_us: int = 0
    delay_count: int = 0
    capacity: int = 0
    pdr: float | None = None  # %
    pdd_s: float | None = None
    pdd_beacons: float | None = None
    eta: float | None = None  # %


@dataclass
class StationRecord:
    sid: int
    aid: int
    kind: str
    distance_m: float
    rate_kbps: int
    ledger: EnergyLedger
    energy_mj: float = 0.0
    avg_current_ma: float = 0.0
    energy_per_bit_uj: float | None = None

    @property
    def sleep_share(self) -> float:
        return self.ledger.share("sleep")


@dataclass
class MetricsReport:
    scenario: str
    seed: int
    duration_us: int
    n_cycles: int
    dtim_interval_us: int
    warmup_cycles: int
    dl: DirectionStats = field(default_factory=DirectionStats)
    ul: DirectionStats = field(default_factory=DirectionStats)
    multicast: DirectionStats = field(default_factory=DirectionStats)
    attempts: int = 0
    collisions: int = 0
    retransmissions: int = 0
    corrupted_frames: int = 0
    stations: list = field(default_factory=list)
    worst_sid: int | None = None
    worst_energy_mj: float | None = None
    worst_avg_current_ma: float | None = None
    worst_energy_per_bit_uj: float | None = None
    lifetimes_years: dict = field(default_factory=dict)
    min_sleep_share: float | None = None
    mean_state_shares: dict = field(default_factory=dict)
    audit_violations: int | None = None

    def direction(self, d) -> DirectionStats:
        return self.dl if Direction(d) is Direction.DL else self.ul

    def scalar_metrics(self) -> dict:
        """Flat name -> value map of the headline numbers (None when undefined)."""
        out = {}
        for name, st in (("dl", self.dl), ("ul", self.ul)):
            for key in ("generated", "delivered", "dropped", "in_flight", "pdr", "pdd_s", "pdd_beacons", "eta"):
                out[f"{key}_{name}"] = getattr(st, key)
        out.update(
            multicast_generated=self.multicast.generated,
            multicast_delivered=self.multicast.delivered,
            attempts=self.attempts,
            collisions=self.collisions,
            retransmissions=self.retransmissions,
            corrupted_frames=self.corrupted_frames,
            worst_sid=self.worst_sid,
            worst_energy_mj=self.worst_energy_mj,
            worst_avg_current_ma=self.worst_avg_current_ma,
            worst_energy_per_bit_uj=self.worst_energy_per_bit_uj,
            min_sleep_share=self.min_sleep_share,
        )
        for state in STATES:
            out[f"share_{state}"] = self.mean_state_shares.get(state)
        for name, years in self.lifetimes_years.items():
            out[f"lifetime_years_{name}"] = years
        if self.audit_violations is not None:
            out["audit_violations"] = self.audit_violations
        return out


def compute_occupancy(delivered: dict, schedule, exchange_us: dict, cycles: int = 1) -> dict:
    """Occupancy per direction in percent: delivered packets over theoretical capacity.

    Capacity is the number of minimal top-rate exchanges (``exchange_us`` per
    direction) that fit in the schedule's segments over ``cycles`` cycles.
    """
    capacity = segment_capacity(schedule, exchange_us, cycles)
    out = {}
    for d, cap in capacity.items():
        if cap <= 0:
            raise ZeroCapacity(f"no {d.value} segment time allocated")
        out[d] = 100.0 * delivered.get(d, 0) / cap
    return out


def segment_capacity(schedule, exchange_us: dict, cycles: int = 1) -> dict:
    """Sum over segments of floor(duration / exchange), times ``cycles``."""
    out = {}
    for d, kind in ((Direction.DL, "dl"), (Direction.UL, "ul")):
        per_cycle = sum(seg.duration // exchange_us[d] for seg in schedule.segments(kind))
        out[d] = per_cycle * cycles
    return out


def compute_pdd(records: Iterable, dtim_interval_us: int) -> tuple[float, float]:
    """Mean delay of delivered packets as (seconds, DTIM intervals).

    ``records`` are ``(generated_us, delivered_us)`` pairs.
    """
    total = 0
    n = 0
    for generated, delivered in records:
        total += delivered - generated
        n += 1
    if n == 0:
        raise NoDeliveries("no delivered packets")
    mean_us = total / n
    return mean_us / US_PER_S, mean_us / dtim_interval_us


def finalize_direction(st: DirectionStats, dtim_interval_us: int) -> None:
    settled = st.delivered + st.dropped
    st.pdr = 100.0 * st.delivered / settled if settled else None
    if st.delay_count:
        mean_us = st.delay_sum_us / st.delay_count
        st.pdd_s = mean_us / US_PER_S
        st.pdd_beacons = mean_us / dtim_interval_us
    if st.capacity:
        st.eta = 100.0 * st.measured_delivered / st.capacity


def summarize_energy(report: MetricsReport, profile: RadioPowerProfile, batteries, reference: str) -> None:
    if not report.stations:
        return
    ledgers = [s.ledger for s in report.stations]
    for s in report.stations:
        s.energy_mj = energy_consumed(s.ledger, profile)
        s.avg_current_ma = average_current(s.ledger, profile)
        try:
            s.energy_per_bit_uj = energy_per_bit(s.ledger, profile)
        except NoTraffic:
            s.energy_per_bit_uj = None
    w = worst_case(ledgers, profile)
    worst = report.stations[w]
    report.worst_sid = worst.sid
    report.worst_energy_mj = worst.energy_mj
    report.worst_avg_current_ma = worst.avg_current_ma
    report.worst_energy_per_bit_uj = worst.energy_per_bit_uj
    if worst.avg_current_ma > 0:
        report.lifetimes_years = {b.name: battery_lifetime(worst.avg_current_ma, b) for b in batteries}
    report.min_sleep_share = min(s.sleep_share for s in report.stations)
    report.mean_state_shares = {st: statistics.fmean(s.ledger.share(st) for s in report.stations) for st in STATES}


# ---------------------------------------------------------------------------
# writers


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerow(["scenario", report.scenario])
        w.writerow(["seed", report.seed])
        w.writerow(["duration_us", report.duration_us])
        w.writerow(["dtim_interval_us", report.dtim_interval_us])
        w.writerow(["n_cycles", report.n_cycles])
        for k, v in report.scalar_metrics().items():
            w.writerow([k, _fmt(v)])


STATION_COLUMNS = ["sid", "aid", "kind", "distance_m", "rate_kbps", "t_rx_us", "t_tx_us", "t_idle_us",
                   "t_sleep_us", "bits_delivered", "energy_mj", "avg_current_ma", "energy_per_bit_uj",
                   "sleep_share"]


def write_stations_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(STATION_COLUMNS)
        for s in report.stations:
            l = s.ledger
            w.writerow([s.sid, s.aid, s.kind, _fmt(s.distance_m), s.rate_kbps, l.t_rx, l.t_tx, l.t_idle,
                        l.t_sleep, l.bits_delivered, _fmt(s.energy_mj), _fmt(s.avg_current_ma),
                        _fmt(s.energy_per_bit_uj), _fmt(s.sleep_share)])


def aggregate(reports: list) -> dict:
    """Per-scenario mean and sample standard deviation of every scalar metric."""
    by_scenario: dict = {}
    for r in sorted(reports, key=lambda r: (r.scenario, r.seed)):
        by_scenario.setdefault(r.scenario, []).append(r)
    out = {}
    for name, runs in by_scenario.items():
        metrics = {}
        keys = list(runs[0].scalar_metrics())
        for k in keys:
            vals = [r.scalar_metrics().get(k) for r in runs]
            vals = [v for v in vals if isinstance(v, (int, float)) and not isinstance(v, bool)]
            if not vals:
                metrics[k] = {"mean": None, "std": None, "n": 0}
                continue
            mean = statistics.fmean(vals)
            std = statistics.stdev(vals) if len(vals) > 1 else 0.0
            metrics[k] = {"mean": mean, "std": std, "n": len(vals)}
        out[name] = {"seeds": [r.seed for r in runs], "metrics": metrics}
    return out


def write_summary(summary: dict, out_dir) -> None:
    out_dir = Path(out_dir)
    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scenario", "metric", "mean", "std", "n"])
        for name, entry in summary.items():
            for k, m in entry["metrics"].items():
                w.writerow([name, k, _fmt(m["mean"]), _fmt(m["std"]), m["n"]])
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def write_charts(reports: list, out_dir) -> None:
    """Chart-ready CSVs: mean state-time shares and worst-case battery lifetimes."""
    out_dir = Path(out_dir)
    by_scenario: dict = {}
    for r in sorted(reports, key=lambda r: (r.scenario, r.seed)):
        by_scenario.setdefault(r.scenario, []).append(r)
    with open(out_dir / "chart_state_shares.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scenario", "state", "share_percent"])
        for name, runs in by_scenario.items():
            for state in STATES:
                vals = [r.mean_state_shares[state] for r in runs if state in r.mean_state_shares]
                if vals:
                    w.writerow([name, state, _fmt(100.0 * statistics.fmean(vals))])
    with open(out_dir / "chart_battery_lifetime.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scenario", "battery", "lifetime_years"])
        for name, runs in by_scenario.items():
            batteries = runs[0].lifetimes_years.keys()
            for b in batteries:
                vals = [r.lifetimes_years[b] for r in runs if b in r.lifetimes_years]
                w.writerow([name, b, _fmt(statistics.fmean(vals))])


def report_to_dict(report: MetricsReport) -> dict:
    d = asdict(report)
    d.pop("stations")
    return d


def is_finite(x) -> bool:
    return x is not None and math.isfinite(x)
