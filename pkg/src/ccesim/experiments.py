"""Declarative experiment orchestration.

An experiment is a population-config template, a list of sweep axes
(each axis rewrites one or more config fields), and a repetition count.
Every (sweep point, repetition) pair runs with a seed derived from the
master seed and its indices, so adding axes or repetitions never
perturbs existing runs and results are identical at any worker count.

Aggregation reduces each sweep point's repetitions to per-step
cross-repetition medians of the population median skill (with standard
errors across repetitions only), mean strategy shares, and per-seed
final-dominance counts.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .model import ConfigError, StrategyId
from .population import PopulationConfig, normalize_adopters, run
from .seeds import DOMAIN_RUN, seed_for

DOMINANCE_SHARE = 0.5
CROSSOVER_WINDOW = 10
REQUIRED_THRESHOLD_RATES = (0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99)


@dataclass(frozen=True)
class SweepAxis:
    """One swept dimension: dotted config paths and parallel value lists.

    ``paths`` name PopulationConfig fields ("in_group_rate", "m",
    "base.alpha", "effects.r_beta_s", ...). With several paths, each
    value is a tuple assigning all of them at once (an "arm" axis).
    ``labels`` name the values in outputs; defaults to repr of values.
    """

    paths: tuple[str, ...]
    values: tuple[Any, ...]
    labels: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        if not self.paths:
            raise ConfigError("sweep axis needs at least one path")
        if not self.values:
            raise ConfigError(f"sweep axis {self.paths} needs at least one value")
        if self.labels and len(self.labels) != len(self.values):
            raise ConfigError("sweep axis labels must match values one to one")

    @property
    def column(self) -> str:
        return self.name or self.paths[0].split(".")[-1]

    def label_for(self, index: int) -> str:
        if self.labels:
            return self.labels[index]
        value = self.values[index]
        return repr(value) if isinstance(value, (tuple, list)) else str(value)

    def coord_for(self, index: int):
        value = self.values[index]
        if self.labels or isinstance(value, (tuple, list)):
            return self.label_for(index)
        return value


def axis(path, values, labels=(), name=""):
    """Convenience constructor accepting a single path or a tuple of paths."""
    paths = (path,) if isinstance(path, str) else tuple(path)
    return SweepAxis(paths, tuple(values), tuple(labels), name)


def set_config_value(config: PopulationConfig, path: str, value) -> PopulationConfig:
    """Return a copy of ``config`` with the dotted ``path`` replaced."""
    parts = path.split(".")
    if len(parts) == 1:
        fname = parts[0]
        if fname not in {f.name for f in dataclasses.fields(config)}:
            raise ConfigError(f"unknown sweep path {path!r}")
        if fname == "initial_adopters":
            value = normalize_adopters(value)
        return replace(config, **{fname: value})
    if len(parts) == 2:
        outer, inner = parts
        if outer not in ("base", "effects"):
            raise ConfigError(f"unknown sweep path {path!r}")
        target = getattr(config, outer)
        if inner not in {f.name for f in dataclasses.fields(target)}:
            raise ConfigError(f"unknown sweep path {path!r}")
        return replace(config, **{outer: replace(target, **{inner: value})})
    raise ConfigError(f"unknown sweep path {path!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    base: PopulationConfig
    sweep: tuple[SweepAxis, ...] = ()
    repetitions: int = 1
    master_seed: int = 0
    outputs: tuple[str, ...] = ("aggregates", "summary")
    budget: int = 10**6
    crossover_arms: tuple[str, str] | None = None

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        n_points = self.point_count()
        if n_points * self.repetitions > self.budget:
            raise ConfigError(
                f"experiment would launch {n_points * self.repetitions} runs, "
                f"over the budget of {self.budget}"
            )
        for point in range(n_points):
            self.config_at(point).validate()
        if self.crossover_arms is not None:
            labels = set(self.point_labels())
            for arm in self.crossover_arms:
                if arm not in labels:
                    raise ConfigError(f"crossover arm {arm!r} is not a sweep label")

    def point_count(self) -> int:
        count = 1
        for ax in self.sweep:
            count *= len(ax.values)
        return count

    def point_indices(self, point: int) -> tuple[int, ...]:
        indices = []
        for ax in reversed(self.sweep):
            indices.append(point % len(ax.values))
            point //= len(ax.values)
        return tuple(reversed(indices))

    def config_at(self, point: int) -> PopulationConfig:
        config = self.base
        for ax, idx in zip(self.sweep, self.point_indices(point)):
            value = ax.values[idx]
            if len(ax.paths) == 1:
                config = set_config_value(config, ax.paths[0], value)
            else:
                for path, component in zip(ax.paths, value):
                    config = set_config_value(config, path, component)
        return config

    def coords_at(self, point: int) -> tuple:
        return tuple(
            ax.coord_for(idx) for ax, idx in zip(self.sweep, self.point_indices(point))
        )

    def coord_columns(self) -> tuple[str, ...]:
        return tuple(ax.column for ax in self.sweep)

    def point_labels(self) -> list[str]:
        labels = []
        for point in range(self.point_count()):
            parts = [
                ax.label_for(idx)
                for ax, idx in zip(self.sweep, self.point_indices(point))
            ]
            labels.append("/".join(parts) if parts else "base")
        return labels

    def seed_at(self, point: int, repetition: int) -> int:
        # hash per-axis indices rather than the flattened point index, so
        # appending values to any axis leaves existing runs' seeds intact
        return seed_for(
            self.master_seed, DOMAIN_RUN, *self.point_indices(point), repetition
        )


@dataclass(frozen=True)
class AggregateRecord:
    """Cross-repetition aggregate for one sweep point."""

    coords: tuple
    label: str
    median_of_medians: np.ndarray   # (steps + 1,)
    median_se: np.ndarray           # (steps + 1,)
    mean_shares: np.ndarray         # (steps + 1, 3)
    dominant_count: tuple[int, int, int]
    none_count: int
    repetitions: int

    @property
    def final_dominant(self) -> str:
        shares = self.mean_shares[-1]
        best = int(np.argmax(shares))
        return StrategyId(best).token if shares[best] > DOMINANCE_SHARE else "none"

    @property
    def dominance_fractions(self) -> tuple[float, float, float]:
        return tuple(c / self.repetitions for c in self.dominant_count)

    @property
    def final_median(self) -> float:
        return float(self.median_of_medians[-1])


def _run_one(args) -> tuple[int, int, np.ndarray, np.ndarray]:
    experiment, point, repetition = args
    config = replace(experiment.config_at(point), seed=experiment.seed_at(point, repetition))
    result = run(config, record_groups=False)
    return point, repetition, result.population_median, result.population_shares


def _execute(experiment: ExperimentConfig, threads: int):
    tasks = [
        (experiment, point, rep)
        for point in range(experiment.point_count())
        for rep in range(experiment.repetitions)
    ]
    if threads == 1 or len(tasks) == 1:
        return [_run_one(t) for t in tasks]
    import concurrent.futures as cf

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    workers = min(workers, len(tasks))
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (workers * 8))))


def run_experiment(experiment: ExperimentConfig, threads: int = 1) -> list[AggregateRecord]:
    """Run all sweep points and repetitions; aggregate per sweep point.

    Deterministic end to end: per-run seeds derive from (master seed,
    point index, repetition index) and aggregation reduces repetitions
    in index order regardless of completion order.
    """
    experiment.validate()
    steps = experiment.base.steps
    points, reps = experiment.point_count(), experiment.repetitions
    medians = np.empty((points, reps, steps + 1))
    shares = np.empty((points, reps, steps + 1, 3))
    for point, rep, med, shr in _execute(experiment, threads):
        if med.shape[0] != steps + 1:
            raise ConfigError("sweeping 'steps' is not supported; fix it in the template")
        medians[point, rep] = med
        shares[point, rep] = shr

    labels = experiment.point_labels()
    records = []
    for point in range(points):
        final = shares[point, :, -1, :]
        dominant = [int((final[:, s] > DOMINANCE_SHARE).sum()) for s in range(3)]
        records.append(
            AggregateRecord(
                coords=experiment.coords_at(point),
                label=labels[point],
                median_of_medians=np.median(medians[point], axis=0),
                median_se=(
                    medians[point].std(axis=0, ddof=1) / math.sqrt(reps)
                    if reps > 1
                    else np.zeros(steps + 1)
                ),
                mean_shares=shares[point].mean(axis=0),
                dominant_count=tuple(dominant),
                none_count=reps - sum(dominant),
                repetitions=reps,
            )
        )
    return records


def crossover_generation(
    series_a: np.ndarray, series_b: np.ndarray, window: int = CROSSOVER_WINDOW
) -> int | None:
    """First step where ``series_a`` exceeds ``series_b`` and stays higher
    for the debounce window (truncated at the series end)."""
    above = np.asarray(series_a) > np.asarray(series_b)
    n = len(above)
    for g in range(1, n):
        if above[g: min(g + window, n)].all():
            return g
    return None


def find_crossover(
    records: Sequence[AggregateRecord], arm_a: str, arm_b: str, window: int = CROSSOVER_WINDOW
) -> int | None:
    by_label = {r.label: r for r in records}
    try:
        a, b = by_label[arm_a], by_label[arm_b]
    except KeyError as missing:
        raise ConfigError(f"no sweep point labelled {missing}") from None
    return crossover_generation(a.median_of_medians, b.median_of_medians, window)


def dominance_threshold(
    experiment: ExperimentConfig,
    threads: int = 1,
    strategy: StrategyId = StrategyId.COMPLEMENT,
) -> tuple[float | None, list[tuple[float, float]]]:
    """Dominance fractions over an in-group-rate sweep.

    The experiment's (single) sweep axis must target ``in_group_rate``
    and include the canonical rate set. Returns the smallest rate whose
    fraction of ``strategy``-dominant repetitions exceeds one half, plus
    the per-rate fractions.
    """
    if len(experiment.sweep) != 1 or experiment.sweep[0].paths != ("in_group_rate",):
        raise ConfigError("dominance_threshold needs a single in_group_rate sweep axis")
    rates = tuple(float(v) for v in experiment.sweep[0].values)
    missing = [r for r in REQUIRED_THRESHOLD_RATES if r not in rates]
    if missing:
        raise ConfigError(f"in_group_rate sweep must include {missing}")
    records = run_experiment(experiment, threads=threads)
    fractions = [
        (rate, record.dominance_fractions[int(strategy)])
        for rate, record in zip(rates, records)
    ]
    for rate, fraction in sorted(fractions):
        if fraction > 0.5:
            return rate, fractions
    return None, fractions


def skill_heatmap(
    experiment: ExperimentConfig, threads: int = 1
) -> list[tuple[float, float, float]]:
    """Final median skill over a (reduction-of-error x reduction-of-
    dispersion) grid for a homogeneous single-strategy population.

    The experiment must sweep exactly ``effects.r_alpha_c`` and
    ``effects.r_beta_c`` (the homogeneous population adopts the
    Complement slot). Returns (d_alpha, d_beta, final median) rows.
    """
    paths = tuple(p for ax in experiment.sweep for p in ax.paths)
    if sorted(paths) != ["effects.r_alpha_c", "effects.r_beta_c"]:
        raise ConfigError(
            "skill_heatmap sweeps exactly effects.r_alpha_c and effects.r_beta_c"
        )
    for ax in experiment.sweep:
        if len(ax.values) < 5:
            raise ConfigError("heatmap axes need at least 5 values")
        for v in ax.values:
            if not (0.0 <= float(v) < 1.0):
                raise ConfigError("heatmap axis values must be in [0, 1)")
    columns = [ax.paths[0] for ax in experiment.sweep]
    ia = columns.index("effects.r_alpha_c")
    ib = columns.index("effects.r_beta_c")
    records = run_experiment(experiment, threads=threads)
    rows = []
    for record in records:
        rows.append((float(record.coords[ia]), float(record.coords[ib]), record.final_median))
    return rows
