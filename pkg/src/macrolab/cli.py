"""Command-line front end.

Subcommands: simulate, sweep, shock, classify, sloppy-spectrum,
sloppy-walk.  Every run writes its delimited/JSON outputs, a rendered
figure, and a manifest into the output directory.  Exit codes: 0 success
(including recorded blow-ups), 2 configuration error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ResolvedConfig, parse_config
from .economy import simulate
from .manifest import build_manifest, write_manifest
from .output import (
    classification_to_dict,
    read_trajectory_csv,
    trajectory_status_json,
    write_phase_map,
    write_spectrum,
    write_trajectory,
    write_walk,
    write_json,
)
from .phases import classify_phase, summarize
from .shocks import ShockSchedule
from .sloppy import (
    SimulatorEvaluator,
    eigen_spectrum,
    gauss_newton_hessian,
    log_jacobian,
    stiff_walk,
)
from .sweep import sweep2d

SUBCOMMANDS = ("simulate", "sweep", "shock", "classify",
               "sloppy-spectrum", "sloppy-walk")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _schedule_windows(schedule: ShockSchedule | None):
    if schedule is None:
        return []
    return [(ev.t_start, ev.t_end) for ev in schedule.events]


def _protocol_echo(cfg: ResolvedConfig) -> dict:
    s = cfg.sloppy
    return {
        "names": list(s.names), "channels": list(s.channels),
        "window": list(s.window), "stride": s.stride,
        "ensemble": s.ensemble, "scales": dict(s.scales),
        "sentinel": s.sentinel, "fd_step": s.fd_step,
        "seed": cfg.run.seed,
    }


def dispatch(subcommand: str, cfg: ResolvedConfig, out_dir: Path,
             threads: int = 0, make_plots: bool = True) -> int:
    """Run one subcommand against a resolved config; returns an exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = cfg.run
    seed_list = [run.seed]

    if subcommand in ("simulate", "shock"):
        schedule = cfg.shocks.schedule() if subcommand == "shock" else None
        traj = simulate(cfg.market, cfg.policy, schedule,
                        n_steps=run.n_steps, seed=run.seed,
                        renormalize=run.renormalize)
        windows = _schedule_windows(schedule)
        write_trajectory(out_dir / "trajectory.csv", traj,
                         shock_windows=windows if subcommand == "shock"
                         else None)
        write_json(out_dir / "status.json", trajectory_status_json(traj))
        if make_plots:
            from .plots import save_trajectory_figure
            save_trajectory_figure(out_dir / "trajectory.png", traj,
                                   shock_windows=windows or None)

    elif subcommand == "sweep":
        spec = cfg.sweep.spec(run.seed)
        seed_list = spec.seed_list()
        schedule = cfg.shocks.schedule()
        pm = sweep2d(spec, cfg.market, cfg.policy, schedule,
                     threads=threads)
        write_phase_map(out_dir / "phase_map.csv", pm)
        if make_plots:
            from .plots import save_phase_map_figure
            save_phase_map_figure(out_dir / "phase_map.png", pm)

    elif subcommand == "classify":
        if not run.input_trajectory:
            raise ConfigError(
                "classify needs run.input_trajectory = <trajectory CSV>")
        traj = read_trajectory_csv(Path(run.input_trajectory))
        traj.manifest["n_firms"] = cfg.market.n_firms
        schedule = cfg.shocks.schedule()
        shock_end = schedule.end() if schedule is not None else None
        summ = summarize(traj, run.effective_burn_in(),
                         cfg.sweep.thresholds, shock_end=shock_end)
        label = classify_phase(summ, cfg.sweep.thresholds)
        write_json(out_dir / "classification.json",
                   classification_to_dict(label, summ))
        if make_plots:
            from .plots import save_trajectory_figure
            save_trajectory_figure(out_dir / "trajectory.png", traj)

    elif subcommand == "sloppy-spectrum":
        protocol = cfg.sloppy.protocol(run.seed)
        seed_list = list(protocol.seeds)
        evaluator = SimulatorEvaluator(cfg.market, cfg.policy, protocol,
                                       cfg.sloppy.names,
                                       schedule=cfg.shocks.schedule())
        J = log_jacobian(evaluator.vector, evaluator.x0_log,
                         cfg.sloppy.fd_step)
        report = eigen_spectrum(gauss_newton_hessian(J), cfg.sloppy.names)
        write_spectrum(out_dir / "spectrum.json", report,
                       protocol_echo=_protocol_echo(cfg))
        if make_plots:
            from .plots import save_spectrum_figure
            save_spectrum_figure(out_dir / "spectrum.png", report)

    elif subcommand == "sloppy-walk":
        s = cfg.sloppy
        protocol = s.protocol(run.seed)
        seed_list = list(protocol.seeds)
        evaluator = SimulatorEvaluator(cfg.market, cfg.policy, protocol,
                                       s.names,
                                       schedule=cfg.shocks.schedule())
        walk = stiff_walk(
            evaluator, s.names, evaluator.x0_log,
            step_size=s.step_size, max_steps=s.max_steps,
            walk_policy=s.walk_policy, mixed_every=s.mixed_every,
            bound=s.bound, h=s.fd_step, lambda_floor=s.lambda_floor,
            stop_on_label_change=s.stop_on_label_change)
        write_walk(out_dir / "walk.csv", walk)
        if make_plots:
            from .plots import save_walk_figure
            save_walk_figure(out_dir / "walk.png", walk)

    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")

    manifest = build_manifest(subcommand, cfg, seed_list,
                              {"out": str(out_dir), "threads": threads})
    write_manifest(manifest, out_dir)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="macrolab",
        description="Seeded agent-based macroeconomy: trajectories, "
                    "phase maps, shock experiments and sloppiness analysis.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="TOML config file (defaults apply if omitted)")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed")
        p.add_argument("--threads", type=int, default=0,
                       help="worker processes (default: all cores)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="config override, repeatable")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    args = parser.parse_args(argv)

    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    try:
        text = ""
        if args.config is not None:
            text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"macrolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"macrolab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        return dispatch(args.subcommand, cfg, args.out,
                        threads=args.threads,
                        make_plots=not args.no_plots)
    except ConfigError as exc:
        print(f"macrolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"macrolab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
