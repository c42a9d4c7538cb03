"""Command-line interface.

Subcommands:
    run         one simulation; emits step_records.csv
    experiment  sweep/repetition batch; emits aggregates.csv, summary.csv
    field       replicator vector field; emits field_samples.csv
    trajectory  replicator trajectories; emits trajectories.csv
    validate    parse and validate a config, write nothing

Exit codes: 0 success, 2 configuration or validation error, 1 runtime
error. Diagnostics go to stderr; CSVs and the manifest are the only
outputs on stdout-silent success.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__
from .config import parse_config
from .experiments import (
    REQUIRED_THRESHOLD_RATES,
    find_crossover,
    run_experiment,
)
from .model import ConfigError, StrategyId
from .population import run as run_population
from .replicator import (
    PayoffCache,
    SimplexPoint,
    build_field,
    classify_terminal,
    integrate_trajectory,
)
from .tables import (
    FIELD_SAMPLES,
    STEP_RECORDS,
    TRAJECTORIES,
    ManifestWriter,
    aggregates_schema,
    summary_schema,
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="TOML config file")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--threads", type=int, default=0, help="worker count (0 = auto)")
    sub.add_argument("--budget", type=int, default=None, help="override the run budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccesim",
        description="Simulator of cumulative cultural evolution under AI-use strategies",
    )
    parser.add_argument("--version", action="version", version=f"ccesim {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "run one simulation"),
        ("experiment", "run a sweep/repetition batch"),
        ("field", "evaluate the replicator vector field"),
        ("trajectory", "integrate replicator trajectories"),
        ("validate", "validate a config file and exit"),
    ):
        _add_common(subs.add_parser(name, help=text))
    return parser


def _load(args):
    preset = parse_config(args.config)
    experiment, settings = preset.experiment, preset.replicator
    if args.seed is not None:
        experiment = replace(
            experiment,
            master_seed=args.seed,
            base=replace(experiment.base, seed=args.seed),
        )
    if args.budget is not None:
        experiment = replace(experiment, budget=args.budget)
    experiment.validate()
    return experiment, settings


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _cmd_validate(args) -> int:
    _load(args)
    _log(f"config ok: {args.config}")
    return 0


def _cmd_run(args) -> int:
    experiment, _ = _load(args)
    config = replace(experiment.base, seed=experiment.master_seed)
    config.validate()
    _log(f"running 1 simulation ({config.steps} steps, n={config.n}, m={config.m})")
    result = run_population(config, record_groups=True)
    writer = ManifestWriter(args.out, config, experiment.master_seed, __version__)
    writer.emit(result.rows(), STEP_RECORDS, "step_records.csv")
    writer.write()
    _log(f"wrote {args.out}/step_records.csv")
    return 0


def _cmd_experiment(args) -> int:
    experiment, _ = _load(args)
    total = experiment.point_count() * experiment.repetitions
    _log(f"running experiment {experiment.name!r}: {total} simulations")
    records = run_experiment(experiment, threads=args.threads)
    writer = ManifestWriter(args.out, experiment, experiment.master_seed, __version__)

    coords = experiment.coord_columns()
    agg_rows = []
    for record in records:
        for step in range(len(record.median_of_medians)):
            agg_rows.append(
                record.coords
                + (
                    step,
                    float(record.median_of_medians[step]),
                    float(record.median_se[step]),
                    float(record.mean_shares[step, 0]),
                    float(record.mean_shares[step, 1]),
                    float(record.mean_shares[step, 2]),
                )
            )
    if "aggregates" in experiment.outputs:
        writer.emit(agg_rows, aggregates_schema(coords), "aggregates.csv")

    summary_rows = []
    for record in records:
        fractions = record.dominance_fractions
        summary_rows.append(
            record.coords
            + (
                record.label,
                record.final_median,
                float(record.median_se[-1]),
                float(record.mean_shares[-1, 0]),
                float(record.mean_shares[-1, 1]),
                float(record.mean_shares[-1, 2]),
                fractions[0], fractions[1], fractions[2],
                record.final_dominant,
            )
        )
    if "summary" in experiment.outputs:
        writer.emit(summary_rows, summary_schema(coords), "summary.csv")

    if experiment.crossover_arms is not None:
        arm_a, arm_b = experiment.crossover_arms
        generation = find_crossover(records, arm_a, arm_b)
        writer.analysis["crossover"] = {
            "arm_a": arm_a, "arm_b": arm_b, "generation": generation,
        }
        _log(f"crossover {arm_a} over {arm_b}: generation {generation}")

    sweep = experiment.sweep
    if (
        len(sweep) == 1
        and sweep[0].paths == ("in_group_rate",)
        and all(r in {float(v) for v in sweep[0].values} for r in REQUIRED_THRESHOLD_RATES)
    ):
        fractions = {
            float(record.coords[0]): record.dominance_fractions[int(StrategyId.COMPLEMENT)]
            for record in records
        }
        threshold = next(
            (rate for rate, frac in sorted(fractions.items()) if frac > 0.5), None
        )
        writer.analysis["dominance_threshold"] = {
            "strategy": "complement",
            "threshold": threshold,
            "fractions": {str(k): v for k, v in sorted(fractions.items())},
        }
        _log(f"complement dominance threshold: {threshold}")

    writer.write()
    _log(f"wrote {len(writer.outputs)} tables to {args.out}")
    return 0


def _cmd_field(args) -> int:
    experiment, settings = _load(args)
    config = replace(experiment.base, seed=experiment.master_seed)
    _log(
        f"building replicator field: grid {settings.grid_resolution}, "
        f"{settings.replicates} replicates, warmup {settings.warmup_steps}"
    )
    samples, skipped = build_field(
        settings.grid_resolution, config, settings.replicates,
        warmup_steps=settings.warmup_steps, threads=args.threads,
    )
    writer = ManifestWriter(args.out, experiment, experiment.master_seed, __version__)
    rows = [
        (
            s.point.x0, s.point.xc, s.point.xs,
            s.velocity[0], s.velocity[1], s.velocity[2],
            s.speed, "low" if s.low_confidence else "high",
        )
        for s in samples
    ]
    writer.emit(rows, FIELD_SAMPLES, "field_samples.csv")
    writer.analysis["skipped_points"] = [
        [p.x0, p.xc, p.xs] for p in skipped
    ]
    writer.write()
    _log(f"wrote {len(rows)} field samples ({len(skipped)} unrepresentable points skipped)")
    return 0


def _cmd_trajectory(args) -> int:
    experiment, settings = _load(args)
    config = replace(experiment.base, seed=experiment.master_seed)
    cache = PayoffCache(
        config, settings.replicates, settings.warmup_steps,
        memo_resolution=settings.grid_resolution,
    )
    writer = ManifestWriter(args.out, experiment, experiment.master_seed, __version__)
    rows = []
    terminals = []
    for traj_id, start in enumerate(settings.starts):
        path = integrate_trajectory(
            SimplexPoint(*start), config, settings.replicates,
            dt=settings.dt, t_max=settings.t_max,
            warmup_steps=settings.warmup_steps, cache=cache,
            speed_tol=settings.speed_tol, record_every=settings.record_every,
        )
        for t, point in path:
            rows.append((traj_id, t, point.x0, point.xc, point.xs))
        terminals.append(classify_terminal(path[-1][1]))
        _log(f"trajectory {traj_id}: start {start} -> {terminals[-1]}")
    writer.emit(rows, TRAJECTORIES, "trajectories.csv")
    writer.analysis["terminals"] = terminals
    writer.write()
    _log(f"wrote {len(rows)} trajectory rows for {len(settings.starts)} starts")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "run": _cmd_run,
    "experiment": _cmd_experiment,
    "field": _cmd_field,
    "trajectory": _cmd_trajectory,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        _log(f"configuration error: {err}")
        return 2
    except Exception as err:  # runtime failure path: exit 1, diagnostics on stderr
        _log(f"error: {type(err).__name__}: {err}")
        return 1


def main() -> None:
    sys.exit(cli_main())
