"""Command-line front end: batch runs over scenarios and seeds, plus debug helpers.

Exit codes: 0 on success, 1 when a run fails (or ``--check-table3`` finds a
band violation), 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .aid import SignalingMode, aid_from_raw, build_beacon_sequence, interval_owner
from .bands import check_bands
from .config import BUILTIN_SCENARIOS, PhyConfig, apply_overrides, dump_config, load_scenario
from .engine import run as run_simulation
from .errors import AhSimError, ConfigInvalid, ParseError, UnknownScenario
from .eventlog import CsvSink
from .metrics import aggregate, write_charts, write_metrics_csv, write_stations_csv, write_summary
from .phy import coverage_radius, rate_staircase

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_CONFIG = 2


def _seeds(values) -> list[int]:
    out = []
    for v in values:
        for part in str(v).split(","):
            part = part.strip()
            if part:
                try:
                    out.append(int(part))
                except ValueError:
                    raise ConfigInvalid(f"seed {part!r} is not an integer") from None
    return out


def _load_requests(args) -> list:
    names = []
    for s in args.scenario or []:
        names.extend(BUILTIN_SCENARIOS if s == "all" else [s])
    names.extend(args.config or [])
    if not names:
        raise ConfigInvalid("give at least one --scenario or --config")
    configs = []
    for name in names:
        cfg = load_scenario(name)
        if args.duration is not None:
            cfg = apply_overrides(cfg, [f"duration={args.duration}"])
        if args.set:
            cfg = apply_overrides(cfg, args.set)
        configs.append(cfg)
    return configs


def _run_one(config, seed: int, events_path, audit: bool):
    sinks = [CsvSink(events_path)] if events_path else []
    return run_simulation(config, seed=seed, sinks=sinks, audit=audit)


def cmd_run(args) -> int:
    try:
        configs = _load_requests(args)
        seeds = _seeds(args.seed) if args.seed else None
        if seeds is not None and not seeds:
            raise ConfigInvalid("--seed list is empty")
    except (ConfigInvalid, ParseError, UnknownScenario) as exc:
        print(f"ahsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for cfg in configs:
        for seed in seeds or [cfg.seed]:
            events = out / f"events_{cfg.name}_seed{seed}.csv" if args.events else None
            jobs.append((cfg, seed, events))

    audit = args.audit or args.check_table3
    reports, failed = [], 0
    with ProcessPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [(cfg.name, seed, pool.submit(_run_one, cfg, seed, events, audit)) for cfg, seed, events in jobs]
        for name, seed, fut in futures:
            try:
                reports.append(fut.result())
            except Exception as exc:  # any failure marks the batch as failed
                failed += 1
                print(f"ahsim: run {name} seed {seed} failed: {type(exc).__name__}: {exc}", file=sys.stderr)

    reports.sort(key=lambda r: (r.scenario, r.seed))
    for r in reports:
        write_metrics_csv(r, out / f"metrics_{r.scenario}_seed{r.seed}.csv")
        write_stations_csv(r, out / f"stations_{r.scenario}_seed{r.seed}.csv")
        if not args.quiet:
            print(_one_line(r))
    if reports:
        write_summary(aggregate(reports), out)
        write_charts(reports, out)

    status = EXIT_RUN_FAILED if failed else EXIT_OK
    if args.check_table3:
        results = check_bands(reports)
        for res in results:
            print(res.line())
        if any(res.passed is False for res in results):
            status = EXIT_RUN_FAILED
    return status


def _fmt(v, spec):
    return "n/a" if v is None else format(v, spec)


def _one_line(r) -> str:
    life = r.lifetimes_years.get("AA-pair")
    return (f"{r.scenario} seed={r.seed} pdr_dl={_fmt(r.dl.pdr, '.3f')}% pdr_ul={_fmt(r.ul.pdr, '.3f')}% "
            f"pdd_dl={_fmt(r.dl.pdd_s, '.3f')}s pdd_ul={_fmt(r.ul.pdd_s, '.3f')}s "
            f"eta_ul={_fmt(r.ul.eta, '.4f')}% min_sleep={_fmt(r.min_sleep_share, '.5f')} "
            f"lifetime={_fmt(life, '.2f')}y")


def cmd_aid(args) -> int:
    try:
        aids = [aid_from_raw(a) for a in args.raw]
        mode = SignalingMode(args.mode)
        beacons = build_beacon_sequence({a.group for a in aids}, mode, aids)
    except (AhSimError, ValueError) as exc:
        print(f"ahsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for a in aids:
        print(f"aid {a.raw}: page={a.page} block={a.block} subblock={a.subblock} index={a.index} "
              f"owner={interval_owner(a, mode)}")
    print(f"dtim {beacons[0].dtim.hex()}")
    for b in beacons[1:]:
        for t in b.tims:
            print(f"tim slot={b.slot} group={t.group[0]}:{t.group[1]} {t.hex()}")
    return EXIT_OK


def cmd_phy(args) -> int:
    try:
        profile = PhyConfig(environment=args.environment, channel_width=args.channel_width).profile()
    except AhSimError as exc:
        print(f"ahsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"# coverage radius {coverage_radius(profile):.1f} m")
    print("distance_m,rate_kbps")
    for d, rate in rate_staircase(profile, args.max_distance, args.step):
        print(f"{d:g},{rate}")
    return EXIT_OK


def cmd_show(args) -> int:
    try:
        cfg = load_scenario(args.scenario)
        if args.set:
            cfg = apply_overrides(cfg, args.set)
    except (ConfigInvalid, ParseError, UnknownScenario) as exc:
        print(f"ahsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahsim", description="IEEE 802.11ah MAC simulator for dense M2M networks.")
    p.add_argument("--version", action="version", version=f"ahsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate scenarios over a list of seeds")
    r.add_argument("--scenario", action="append",
                   help=f"built-in scenario ({', '.join(BUILTIN_SCENARIOS)}, or 'all'); repeatable")
    r.add_argument("--config", action="append", help="scenario YAML file; repeatable")
    r.add_argument("--seed", nargs="+", help="seeds, space or comma separated (default: the config's seed)")
    r.add_argument("--duration", type=float, help="simulated seconds (overrides the config)")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. grouping.subslots_ul=4; repeatable")
    r.add_argument("--events", action="store_true", help="write the per-frame event log")
    r.add_argument("--audit", action="store_true", help="run the group isolation audit")
    r.add_argument("--check-table3", action="store_true",
                   help="check results against the reference bands (implies --audit)")
    r.add_argument("--out", default="results", help="output directory (default: results)")
    r.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    r.add_argument("--quiet", action="store_true", help="no per-run summary lines")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("aid", help="decode AIDs and show the beacon bitmaps that page them")
    a.add_argument("raw", type=int, nargs="+")
    a.add_argument("--mode", default="non-tim-offset", choices=[m.value for m in SignalingMode])
    a.set_defaults(func=cmd_aid)

    ph = sub.add_parser("phy", help="print the distance to rate staircase")
    ph.add_argument("--environment", default="outdoor", choices=["outdoor", "indoor"])
    ph.add_argument("--channel-width", type=int, default=2, choices=[1, 2])
    ph.add_argument("--max-distance", type=float, default=1500.0)
    ph.add_argument("--step", type=float, default=50.0)
    ph.set_defaults(func=cmd_phy)

    s = sub.add_parser("show", help="print a scenario as YAML")
    s.add_argument("scenario")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    s.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
