"""Experiment configuration files.

Configs are TOML. A minimal file names a preset:

    experiment = "fig4"

and optional sections override preset defaults:

    [population]        # n/N, m, alpha, beta, delta, steps/Step,
                        # in_group_rate/G, p, equal_sizes, seed,
                        # initial_adopters, allow_unordered_effects
    [effects]           # r_alpha_c, r_beta_c, r_alpha_s, r_beta_s
    [batch]             # repetitions, master_seed, outputs, budget,
                        # crossover, sweep (array of tables)
    [replicator]        # grid_resolution, replicates, warmup_steps,
                        # dt, t_max, speed_tol, record_every, starts

Unknown keys anywhere are hard errors. Short aliases follow the model
parameter table: N, G, Step, p.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .experiments import ExperimentConfig, SweepAxis, axis
from .model import ConfigError, StrategyId
from .population import PopulationConfig, normalize_adopters
from .presets import Preset, ReplicatorSettings, load_preset, DEFAULT_MASTER_SEED

_TOP_KEYS = {"experiment", "population", "effects", "batch", "replicator"}
_POPULATION_KEYS = {
    "n", "m", "alpha", "beta", "delta", "steps", "in_group_rate", "p",
    "equal_sizes", "seed", "initial_adopters", "allow_unordered_effects",
}
_POPULATION_ALIASES = {"N": "n", "G": "in_group_rate", "Step": "steps"}
_EFFECTS_KEYS = {"r_alpha_c", "r_beta_c", "r_alpha_s", "r_beta_s"}
_BATCH_KEYS = {"repetitions", "master_seed", "outputs", "budget", "crossover", "sweep"}
_SWEEP_KEYS = {"path", "paths", "values", "labels", "name"}
_REPLICATOR_KEYS = {
    "grid_resolution", "replicates", "warmup_steps", "dt", "t_max",
    "speed_tol", "record_every", "starts",
}


def _check_keys(section: dict, allowed: set, aliases: dict, where: str) -> dict:
    out = {}
    for key, value in section.items():
        canonical = aliases.get(key, key)
        if canonical not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        if canonical in out:
            raise ConfigError(f"duplicate key {key!r} in [{where}] (alias collision)")
        out[canonical] = value
    return out


def _apply_population(config: PopulationConfig, section: dict) -> PopulationConfig:
    section = _check_keys(section, _POPULATION_KEYS, _POPULATION_ALIASES, "population")
    base = config.base
    if "alpha" in section:
        base = replace(base, alpha=float(section.pop("alpha")))
    if "beta" in section:
        base = replace(base, beta=float(section.pop("beta")))
    config = replace(config, base=base)
    if "p" in section:
        if "initial_adopters" in section:
            raise ConfigError("give either p or initial_adopters, not both")
        fraction = float(section.pop("p"))
        config = replace(
            config, initial_adopters=((-1, StrategyId.COMPLEMENT, fraction),)
        )
    if "initial_adopters" in section:
        config = replace(
            config, initial_adopters=normalize_adopters(section.pop("initial_adopters"))
        )
    casts = {
        "n": int, "m": int, "steps": int, "seed": int,
        "delta": float, "in_group_rate": float,
        "equal_sizes": bool, "allow_unordered_effects": bool,
    }
    for key, value in section.items():
        config = replace(config, **{key: casts[key](value)})
    return config


def _apply_effects(config: PopulationConfig, section: dict) -> PopulationConfig:
    section = _check_keys(section, _EFFECTS_KEYS, {}, "effects")
    effects = replace(config.effects, **{k: float(v) for k, v in section.items()})
    return replace(config, effects=effects)


def _parse_sweep(raw) -> tuple[SweepAxis, ...]:
    axes = []
    for i, entry in enumerate(raw):
        entry = _check_keys(entry, _SWEEP_KEYS, {}, f"batch.sweep[{i}]")
        if ("path" in entry) == ("paths" in entry):
            raise ConfigError(f"batch.sweep[{i}] needs exactly one of path / paths")
        paths = entry.get("paths", entry.get("path"))
        if "values" not in entry:
            raise ConfigError(f"batch.sweep[{i}] needs values")
        values = entry["values"]
        if "paths" in entry:
            values = [tuple(v) for v in values]
        axes.append(
            axis(paths, values, tuple(entry.get("labels", ())), entry.get("name", ""))
        )
    return tuple(axes)


def _apply_batch(experiment: ExperimentConfig, section: dict) -> ExperimentConfig:
    section = _check_keys(section, _BATCH_KEYS, {}, "batch")
    if "sweep" in section:
        experiment = replace(experiment, sweep=_parse_sweep(section.pop("sweep")))
    if "crossover" in section:
        arms = section.pop("crossover")
        if len(arms) != 2:
            raise ConfigError("batch.crossover must name exactly two arm labels")
        experiment = replace(experiment, crossover_arms=(str(arms[0]), str(arms[1])))
    if "outputs" in section:
        experiment = replace(
            experiment, outputs=tuple(str(o) for o in section.pop("outputs"))
        )
    casts = {"repetitions": int, "master_seed": int, "budget": int}
    for key, value in section.items():
        experiment = replace(experiment, **{key: casts[key](value)})
    return experiment


def _apply_replicator(settings: ReplicatorSettings, section: dict) -> ReplicatorSettings:
    section = _check_keys(section, _REPLICATOR_KEYS, {}, "replicator")
    if "starts" in section:
        starts = tuple(tuple(float(c) for c in s) for s in section.pop("starts"))
        for s in starts:
            if len(s) != 3:
                raise ConfigError("replicator.starts entries are [x0, xc, xs] triples")
        settings = replace(settings, starts=starts)
    casts = {
        "grid_resolution": int, "replicates": int, "warmup_steps": int,
        "dt": float, "t_max": float, "speed_tol": float, "record_every": int,
    }
    for key, value in section.items():
        settings = replace(settings, **{key: casts[key](value)})
    return settings


def parse_config(path: str | Path) -> Preset:
    """Load, merge with preset defaults, and validate a config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as handle:
            document = tomllib.load(handle)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"config parse error in {path}: {err}") from None

    unknown = set(document) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    if "experiment" in document:
        preset = load_preset(str(document["experiment"]))
    else:
        from .presets import _single_population

        preset = Preset(
            ExperimentConfig(
                name=path.stem, base=_single_population(),
                master_seed=DEFAULT_MASTER_SEED,
            )
        )

    experiment, settings = preset.experiment, preset.replicator
    base = experiment.base
    if "population" in document:
        base = _apply_population(base, document["population"])
    if "effects" in document:
        base = _apply_effects(base, document["effects"])
    experiment = replace(experiment, base=base)
    if "batch" in document:
        experiment = _apply_batch(experiment, document["batch"])
    if "replicator" in document:
        settings = _apply_replicator(settings, document["replicator"])

    experiment.validate()
    return Preset(experiment, settings)
