"""Command-line front end.

    ftq --scenario hover_fail --fault-rotor 1 --fault-time 3.0 --out-dir out/
    ftq --scenario random_attitude --runs 100 --seed 42 --out-dir mc/

Exit codes: 0 success, 1 a run failed (diverged or not recovered),
2 bad flags, 3 unknown scenario, 4 malformed config, 5 unwritable output.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config, scenario_config
from .export import ExportError, export_csv, write_json
from .simkit.config import KINDS
from .simkit.montecarlo import campaign_configs, run_campaign, summarize
from .simkit.runner import run_scenario

EXIT_OK, EXIT_RUN_FAILED, EXIT_UNKNOWN_SCENARIO, EXIT_BAD_CONFIG, EXIT_BAD_OUTPUT = 0, 1, 3, 4, 5


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftq", description="Fault-tolerant quadrotor NMPC simulations.")
    p.add_argument("--scenario", default="hover_fail", help="one of: " + ", ".join(KINDS))
    p.add_argument("--config", type=Path, help="JSON config merged over the defaults")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a single config entry (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=None,
                   help="Monte-Carlo campaign size (random_attitude only)")
    p.add_argument("--fault-rotor", type=int, choices=(0, 1, 2, 3, 4),
                   help="failed rotor (1-4), 0 for no failure")
    p.add_argument("--fault-time", type=float)
    p.add_argument("--omega", type=float, help="lemniscate angular rate [rad/s]")
    p.add_argument("--indi", choices=("on", "off"))
    p.add_argument("--duration", type=float)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--record-latency", action="store_true",
                   help="write wall-clock solve times (outputs are then no longer reproducible)")
    p.add_argument("--no-figures", action="store_true")
    return p


def _resolve(args):
    """Resolved config dict with command-line flags folded in."""
    cfg = load_config(args.config, args.set)
    sec = cfg[args.scenario]
    if args.fault_rotor is not None:
        sec["fault_rotor"] = args.fault_rotor or None
    if args.fault_time is not None:
        sec["fault_time"] = args.fault_time
    if args.omega is not None:
        if args.scenario != "lemniscate":
            raise ConfigError("--omega only applies to the lemniscate scenario")
        sec["omega"] = args.omega
    if args.duration is not None:
        sec["duration"] = args.duration
    if args.indi is not None:
        cfg["indi"]["enabled"] = args.indi == "on"
    if args.record_latency:
        cfg["output"]["record_latency"] = True
    if args.no_figures:
        cfg["output"]["figures"] = False
    if args.runs is not None:
        if args.runs < 1:
            raise ConfigError("--runs must be at least 1")
        if args.scenario != "random_attitude":
            raise ConfigError("--runs is only supported for random_attitude")
        cfg["campaign"]["runs"] = args.runs
    return cfg


def _prepare_out(out: Path):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ExportError(f"output directory {out} is not writable: {exc}") from exc


def _manifest(args, cfg, files, timings=None):
    m = {
        "artifact_version": __version__,
        "scenario": args.scenario,
        "seed": args.seed,
        "config": cfg,
        "outputs": files,
    }
    if timings is not None:
        m["wall_clock_s"] = timings
    return m


def _run_single(args, cfg, out: Path) -> int:
    sc = scenario_config(cfg, args.scenario, args.seed)
    record = cfg["output"]["record_latency"]
    figures = cfg["output"]["figures"]
    files = ["trajectory.csv", "metrics.json"]
    if figures:
        files += ["timeseries.png", "xy.png"]
    write_json(_manifest(args, cfg, files), out / "manifest.json")

    t0 = time.perf_counter()
    log, metrics = run_scenario(sc)
    elapsed = time.perf_counter() - t0
    export_csv(log, out / "trajectory.csv", record_latency=record)
    summary = metrics.to_dict()
    if not record:
        summary["mean_solver_latency"] = None
    summary.update(diverged=log.diverged, guard_trips=log.guard_trips, steps=len(log))
    write_json(summary, out / "metrics.json")
    if figures:
        from . import plotting
        title = f"{args.scenario} (seed {args.seed})"
        plotting.plot_scenario(log, out / "timeseries.png", title)
        plotting.plot_xy(log, out / "xy.png", title)
    if record:
        write_json(_manifest(args, cfg, files, {"simulation": elapsed}), out / "manifest.json")
    ok = metrics.success and not log.diverged
    print(f"{args.scenario}: success={metrics.success} max_xy={metrics.max_xy_offset:.3f} m "
          f"max_drop={metrics.max_alt_drop:.3f} m recovery={metrics.recovery_time} "
          f"rms={metrics.rms_tracking_error:.3f} m")
    return EXIT_OK if ok else EXIT_RUN_FAILED


def _run_campaign(args, cfg, out: Path) -> int:
    n = int(cfg["campaign"]["runs"])
    record = cfg["output"]["record_latency"]
    figures = cfg["output"]["figures"]
    template = scenario_config(cfg, "random_attitude", args.seed)
    configs = campaign_configs(n, args.seed, template, bool(cfg["campaign"]["include_identity"]))
    run_files = [f"runs/run_{i:03d}.csv" for i in range(n)]
    files = run_files + ["campaign.json"]
    if figures:
        files += ["altitude_profiles.png", "histograms.png"]
    write_json(_manifest(args, cfg, files), out / "manifest.json")
    (out / "runs").mkdir(exist_ok=True)

    t0 = time.perf_counter()
    records = run_campaign(configs, keep_logs=True)
    elapsed = time.perf_counter() - t0
    runs = []
    for rec, name in zip(records, run_files):
        export_csv(rec.log, out / name, record_latency=record)
        m = rec.metrics.to_dict()
        if not record:
            m["mean_solver_latency"] = None
        runs.append({"index": rec.index, "seed": rec.seed, "initial_q": rec.initial_q,
                     "csv": name, "diverged": rec.log.diverged, **m})
    summary = summarize(records)
    write_json({"summary": summary, "runs": runs}, out / "campaign.json")
    if figures:
        from . import plotting
        plotting.plot_altitude_profiles([r.log for r in records], out / "altitude_profiles.png")
        plotting.plot_histograms(summary, out / "histograms.png")
    if record:
        write_json(_manifest(args, cfg, files, {"campaign": elapsed}), out / "manifest.json")
    print(f"campaign of {n}: success_rate={summary['success_rate']:.2f} "
          f"within_1s={summary['recovered_within_1s']:.2f} "
          f"within_2.5s={summary['recovered_within_2p5s']:.2f}")
    return EXIT_OK if summary["success_rate"] == 1.0 else EXIT_RUN_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.scenario not in KINDS:
        print(f"error: unknown scenario {args.scenario!r} (choose from {', '.join(KINDS)})", file=sys.stderr)
        return EXIT_UNKNOWN_SCENARIO
    try:
        cfg = _resolve(args)
        campaign = args.runs is not None
        # validate before touching the output directory
        scenario_config(cfg, args.scenario, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        _prepare_out(args.out_dir)
        if campaign:
            return _run_campaign(args, cfg, args.out_dir)
        return _run_single(args, cfg, args.out_dir)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
