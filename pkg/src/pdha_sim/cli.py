"""Command-line driver: load or pick a model, simulate, export results.

Exit codes: 0 success, 2 validation failure (bad model, bad partition,
CFL violation), 3 divergence.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import models
from .automaton import DiscretizationSpec, ModelDescription, discretize_model
from .errors import (
    DivergenceError,
    ModelFileError,
    PartitionError,
    StepSizeError,
    UnsupportedCombinationError,
    ValidationError,
)
from .executor import SimOptions, classify_execution, simulate
from .export import (
    export_snapshot,
    run_summary,
    write_snapshot_csv,
    write_summary_json,
    write_trajectory_csv,
    write_transitions_csv,
)
from .modelfile import load_model

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdha-sim",
        description="Simulate grid automata with per-point modes and guard-triggered switching.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a model and export trajectory, transitions, summary")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help="path to a JSON model file")
    src.add_argument("--builtin", choices=models.BUILTIN_NAMES, help="built-in model name")
    sim.add_argument("--t-end", type=float, required=True, help="simulation horizon")
    sim.add_argument("--dt", type=float, required=True, help="time step")
    sim.add_argument("--integrator", choices=("euler", "rk4", "characteristic"),
                     help="default: the model's preferred scheme")
    sim.add_argument("--m", type=int, help="override grid points across the full domain")
    sim.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sim.add_argument("--sample-every", type=int, default=1, metavar="K",
                     help="keep every K-th sample in the trajectory export")
    sim.add_argument("--snapshot-at", type=float, action="append", default=[], metavar="T",
                     help="also export the profile at time T (repeatable)")
    sim.add_argument("--probe-x", type=float, default=None,
                     help="grid position for the time-series figure (default: mid-domain)")
    sim.add_argument("--sweep", type=str, default=None, metavar="M1,M2,...",
                     help="run several grid sizes concurrently, one output subdirectory each")
    sim.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return parser


def _resolve_model(args) -> tuple[ModelDescription, int, str]:
    if args.builtin:
        desc = models.builtin_description(args.builtin)
    else:
        desc = load_model(args.model)
    disc = desc.discretization or DiscretizationSpec()
    m = args.m or disc.m
    if m is None:
        raise ValidationError(["no grid size: give --m or a discretization block in the model file"])
    integrator = args.integrator
    if integrator is None:
        integrator = "characteristic" if disc.scheme == "characteristic" else "euler"
    return desc, m, integrator


def _simulate_one(desc: ModelDescription, m: int, integrator: str, args, out_dir: Path) -> None:
    scheme = (desc.discretization.scheme if desc.discretization else None)
    a = discretize_model(desc, m=m, scheme=scheme)
    opts = SimOptions(dt=args.dt, t_end=args.t_end, integrator=integrator)
    t0 = time.perf_counter()
    execution, reach = simulate(a, opts)
    wall = time.perf_counter() - t0
    classification = classify_execution(execution, opts)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_dir / "trajectory.csv", a, execution, sample_every=args.sample_every)
    write_transitions_csv(out_dir / "transitions.csv", execution)
    summary = run_summary(
        a,
        execution,
        reach,
        classification,
        opts_dict={"dt": args.dt, "t_end": args.t_end, "integrator": integrator, "m": m},
        wall_time_s=wall,
    )
    write_summary_json(out_dir / "summary.json", summary)

    snapshots = []
    for t_snap in args.snapshot_at:
        rows = export_snapshot(a, execution, t_snap)
        write_snapshot_csv(out_dir / f"snapshot_t{t_snap:g}.csv", rows)
        snapshots.append((t_snap, rows))

    if not args.no_plots:
        from . import plots  # deferred: matplotlib import is slow

        final_rows = export_snapshot(a, execution, execution.t_final)
        plots.save_profile_figure(
            out_dir / "profile.png", final_rows,
            f"{a.record.source_model}: profile at t={execution.t_final:g}",
        )
        if args.probe_x is not None:
            index = a.mesh.index_of(args.probe_x)
        else:
            index = a.m // 2
        thresholds = sorted({g.threshold for per in a.guards for g in per})
        plots.save_timeseries_figure(out_dir / "timeseries.png", a, execution, index, thresholds)
        for t_snap, rows in snapshots:
            plots.save_profile_figure(
                out_dir / f"snapshot_t{t_snap:g}.png", rows,
                f"{a.record.source_model}: profile at t={t_snap:g}",
            )

    print(
        f"{a.record.source_model}: {execution.transition_count} transitions, "
        f"{classification.kind}, wrote {out_dir}"
    )


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        desc, m, integrator = _resolve_model(args)
        if args.sweep:
            sizes = [int(s) for s in args.sweep.split(",") if s.strip()]
            workers = int(os.environ.get("PDHA_SIM_THREADS", "0")) or min(4, len(sizes))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_simulate_one, desc, size, integrator, args, args.out / f"m{size}")
                    for size in sizes
                ]
                for f in futures:
                    f.result()
        else:
            _simulate_one(desc, m, integrator, args, args.out)
    except (ModelFileError, ValidationError, StepSizeError, PartitionError,
            UnsupportedCombinationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
