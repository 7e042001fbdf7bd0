"""Reference result bands for the four built-in scenarios.

``check_bands`` takes the reports of one or more seeds per scenario and returns
one ``BandResult`` per criterion. Criteria that need a scenario which was not
run are reported as skipped rather than failed.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass

DL_PDR_MIN = 99.9
UL_PDR_MIN = {"agriculture": 99.9, "smart-metering": 99.9, "industrial": 99.8, "animal": 99.8}
PDD_BAND = (0.1, 0.6)  # s
PDD_UL_GE_DL = ("industrial", "animal")
ETA_ORDER = ("agriculture", "animal", "industrial", "smart-metering")
ETA_AGRICULTURE = (4.0, 16.0)  # %
ETA_SMART_METERING_MAX = 0.1  # %
SLEEP_MIN = 0.99
LIFETIME_RATIO = (2.0, 4.5)
LIFETIME_BATTERY = "AA-pair"


@dataclass
class BandResult:
    name: str
    passed: bool | None  # None when skipped
    detail: str

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "SKIP"}[self.passed]

    def line(self) -> str:
        return f"[{self.status}] {self.name}: {self.detail}"


def _mean(values):
    values = [v for v in values if v is not None]
    return statistics.fmean(values) if values else None


def _by_scenario(reports) -> dict:
    out: dict = {}
    for r in sorted(reports, key=lambda r: (r.scenario, r.seed)):
        out.setdefault(r.scenario, []).append(r)
    return out


def check_pdr(runs: dict) -> BandResult:
    bad, seen = [], []
    for name, reps in runs.items():
        if name not in UL_PDR_MIN:
            continue
        for r in reps:
            seen.append(name)
            if r.dl.pdr is None or r.dl.pdr < DL_PDR_MIN:
                bad.append(f"{name}/seed{r.seed} DL {r.dl.pdr}")
            if r.ul.pdr is None or r.ul.pdr < UL_PDR_MIN[name]:
                bad.append(f"{name}/seed{r.seed} UL {r.ul.pdr}")
    if not seen:
        return BandResult("pdr", None, "no reference scenario run")
    return BandResult("pdr", not bad, "; ".join(bad) if bad else f"all {len(seen)} runs within bounds")


def check_pdd(runs: dict) -> BandResult:
    lo, hi = PDD_BAND
    bad, parts = [], []
    for name, reps in runs.items():
        if name not in UL_PDR_MIN:
            continue
        dl = _mean(r.dl.pdd_s for r in reps)
        ul = _mean(r.ul.pdd_s for r in reps)
        parts.append(f"{name} DL {dl:.3f}s UL {ul:.3f}s" if dl is not None and ul is not None else f"{name} n/a")
        for label, v in (("DL", dl), ("UL", ul)):
            if v is None or not lo <= v <= hi:
                bad.append(f"{name} {label} {v}")
        if name in PDD_UL_GE_DL and (dl is None or ul is None or ul < dl):
            bad.append(f"{name} UL < DL")
    if not parts:
        return BandResult("pdd", None, "no reference scenario run")
    return BandResult("pdd", not bad, "; ".join(bad) if bad else ", ".join(parts))


def check_eta(runs: dict) -> BandResult:
    if not all(n in runs for n in ETA_ORDER):
        return BandResult("eta", None, "needs all four reference scenarios")
    eta = {n: _mean(r.ul.eta for r in runs[n]) for n in ETA_ORDER}
    ordered = all(eta[a] > eta[b] for a, b in zip(ETA_ORDER, ETA_ORDER[1:]))
    agri = ETA_AGRICULTURE[0] <= eta["agriculture"] <= ETA_AGRICULTURE[1]
    smart = eta["smart-metering"] < ETA_SMART_METERING_MAX
    detail = " > ".join(f"{n} {eta[n]:.4f}%" for n in ETA_ORDER)
    return BandResult("eta", ordered and agri and smart, detail)


def check_sleep(runs: dict) -> BandResult:
    worst = None
    for name, reps in runs.items():
        for r in reps:
            if r.min_sleep_share is not None and (worst is None or r.min_sleep_share < worst[0]):
                worst = (r.min_sleep_share, name, r.seed)
    if worst is None:
        return BandResult("sleep", None, "no stations")
    share, name, seed = worst
    return BandResult("sleep", share >= SLEEP_MIN, f"lowest sleep share {100 * share:.3f}% ({name}/seed{seed})")


def check_lifetime(runs: dict) -> BandResult:
    if not all(n in runs for n in ETA_ORDER):
        return BandResult("lifetime", None, "needs all four reference scenarios")
    life = {n: _mean(r.lifetimes_years.get(LIFETIME_BATTERY) for r in runs[n]) for n in ETA_ORDER}
    if any(v is None for v in life.values()):
        return BandResult("lifetime", False, f"missing lifetimes: {life}")
    ratio = life["smart-metering"] / life["agriculture"]
    longest = max(life, key=life.get) == "smart-metering"
    shortest = min(life, key=life.get) == "agriculture"
    ok = LIFETIME_RATIO[0] <= ratio <= LIFETIME_RATIO[1] and longest and shortest
    detail = f"ratio {ratio:.2f}; " + ", ".join(f"{n} {v:.2f}y" for n, v in life.items())
    return BandResult("lifetime", ok, detail)


def check_isolation(runs: dict) -> BandResult:
    counts = [(r.scenario, r.seed, r.audit_violations) for reps in runs.values() for r in reps]
    audited = [c for c in counts if c[2] is not None]
    if not audited:
        return BandResult("isolation", None, "no audited runs")
    bad = [f"{n}/seed{s}: {v}" for n, s, v in audited if v]
    detail = "; ".join(bad) if bad else f"0 violations in {len(audited)} audited runs"
    return BandResult("isolation", not bad and len(audited) == len(counts), detail)


def check_bands(reports) -> list[BandResult]:
    runs = _by_scenario(reports)
    return [check(runs) for check in (check_pdr, check_pdd, check_eta, check_sleep, check_lifetime,
                                      check_isolation)]
