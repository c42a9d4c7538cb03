"""Built-in experiment presets.

Each preset returns a fully populated experiment (and, where relevant,
replicator settings) reproducing one of the package's reference
analyses. Override any field through the config file; the preset only
supplies defaults.

Parameter provenance is documented per preset. The group-selection
presets (fig6, fig7c, suppfig2) use effect sizes calibrated so the
published qualitative outcomes are statistically robust at the stated
repetition counts; the calibration targets are noted inline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import AIEffects, BaseLearningParams, ConfigError, StrategyId
from .experiments import ExperimentConfig, axis
from .population import PopulationConfig

DEFAULT_MASTER_SEED = 20260808

# Reference strategy effects for the single-population comparison and the
# replicator analysis: a mild Complement (small error cut, tiny dispersion
# cut) against a strong Substitute (half error, half dispersion).
FIG4_EFFECTS = AIEffects(r_alpha_c=0.2, r_beta_c=0.05, r_alpha_s=0.5, r_beta_s=0.5)

# Group-selection effects: the Complement barely touches dispersion, so a
# Complement group out-grows a no-AI group; the Substitute trades a large
# error cut for a dispersion collapse, so Substitute groups stagnate while
# Substitute still wins well-mixed competition. Calibrated so that with
# 3 groups the structured population (in-group rate 0.85) ends
# Complement-dominant and the well-mixed control ends Substitute-dominant
# in a solid majority of seeds at 1000 steps.
GROUP_EFFECTS = AIEffects(r_alpha_c=0.3, r_beta_c=0.01, r_alpha_s=0.463, r_beta_s=0.9)

# In-group-rate threshold effects: a deeper Substitute dispersion cut with
# a moderate error edge, placing the onset of Complement dominance at the
# top of the canonical rate sweep (above 0.9).
THRESHOLD_EFFECTS = AIEffects(r_alpha_c=0.2, r_beta_c=0.05, r_alpha_s=0.35, r_beta_s=0.85)

THRESHOLD_RATES = (0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99)


@dataclass(frozen=True)
class ReplicatorSettings:
    """Settings consumed by the field and trajectory subcommands."""

    grid_resolution: int = 15
    replicates: int = 1000
    warmup_steps: int = 5
    dt: float = 0.01
    t_max: float = 300.0
    speed_tol: float = 1e-6
    record_every: int = 25
    starts: tuple[tuple[float, float, float], ...] = tuple(
        (i / 6, j / 6, (6 - i - j) / 6) for i in range(1, 5) for j in range(1, 6 - i)
    )


@dataclass(frozen=True)
class Preset:
    experiment: ExperimentConfig
    replicator: ReplicatorSettings = field(default_factory=ReplicatorSettings)


def _single_population(**overrides) -> PopulationConfig:
    defaults = dict(
        n=1000, m=1, base=BaseLearningParams(1.0, 0.5), effects=FIG4_EFFECTS,
        delta=10.0, steps=1000, in_group_rate=1.0,
        initial_adopters=((-1, StrategyId.COMPLEMENT, 0.1),), seed=DEFAULT_MASTER_SEED,
    )
    defaults.update(overrides)
    return PopulationConfig(**defaults)


def fig4() -> Preset:
    """Two arms (Complement seeds vs Substitute seeds), 100 repetitions."""
    base = _single_population()
    arms = axis(
        "initial_adopters",
        (
            ((-1, StrategyId.COMPLEMENT, 0.1),),
            ((-1, StrategyId.SUBSTITUTE, 0.1),),
        ),
        labels=("complement", "substitute"),
        name="arm",
    )
    return Preset(
        ExperimentConfig(
            name="fig4", base=base, sweep=(arms,), repetitions=100,
            master_seed=DEFAULT_MASTER_SEED,
            outputs=("aggregates", "summary"),
            crossover_arms=("complement", "substitute"),
        )
    )


def fig5() -> Preset:
    """Replicator field and trajectories on the strategy simplex."""
    base = _single_population(initial_adopters=(), seed=DEFAULT_MASTER_SEED)
    return Preset(
        ExperimentConfig(
            name="fig5", base=base, sweep=(), repetitions=1,
            master_seed=DEFAULT_MASTER_SEED, outputs=("summary",),
        ),
        ReplicatorSettings(),
    )


def fig6() -> Preset:
    """Structured (3 groups, in-group rate 0.85) vs well-mixed control.

    The structured arm seeds ten percent Complement adopters in group 1
    and ten percent Substitute adopters in group 2 (group 0 starts
    without AI). The mixed arm is one well-mixed population carrying
    the same adopter head-counts (one thirtieth each).
    """
    base = _single_population(
        m=3, in_group_rate=0.85, effects=GROUP_EFFECTS,
        initial_adopters=(
            (1, StrategyId.COMPLEMENT, 0.1),
            (2, StrategyId.SUBSTITUTE, 0.1),
        ),
    )
    arms = axis(
        ("m", "in_group_rate", "initial_adopters"),
        (
            (3, 0.85, ((1, StrategyId.COMPLEMENT, 0.1), (2, StrategyId.SUBSTITUTE, 0.1))),
            (1, 1.0, ((-1, StrategyId.COMPLEMENT, 1 / 30), (-1, StrategyId.SUBSTITUTE, 1 / 30))),
        ),
        labels=("structured", "mixed"),
        name="arm",
    )
    return Preset(
        ExperimentConfig(
            name="fig6", base=base, sweep=(arms,), repetitions=100,
            master_seed=DEFAULT_MASTER_SEED, outputs=("aggregates", "summary"),
        )
    )


def fig7a() -> Preset:
    """Final median skill over the (error cut, dispersion cut) grid for a
    homogeneous single-strategy population, one run per cell."""
    grid = tuple(round(0.1 * k, 2) for k in range(10))
    base = _single_population(
        initial_adopters=((-1, StrategyId.COMPLEMENT, 1.0),),
        allow_unordered_effects=True,
        steps=1000,
    )
    return Preset(
        ExperimentConfig(
            name="fig7a", base=base,
            sweep=(axis("effects.r_alpha_c", grid), axis("effects.r_beta_c", grid)),
            repetitions=1, master_seed=DEFAULT_MASTER_SEED, outputs=("summary",),
        )
    )


def fig7c() -> Preset:
    """Complement-dominance fraction across the in-group-rate sweep."""
    base = _single_population(
        m=3, effects=THRESHOLD_EFFECTS,
        initial_adopters=(
            (1, StrategyId.COMPLEMENT, 0.1),
            (2, StrategyId.SUBSTITUTE, 0.1),
        ),
    )
    return Preset(
        ExperimentConfig(
            name="fig7c", base=base,
            sweep=(axis("in_group_rate", THRESHOLD_RATES),),
            repetitions=100, master_seed=DEFAULT_MASTER_SEED,
            outputs=("aggregates", "summary"),
        )
    )


def suppfig2() -> Preset:
    """Ten equal-sized groups; the group-selection outcome generalizes."""
    base = _single_population(
        m=10, in_group_rate=0.85, effects=GROUP_EFFECTS, equal_sizes=True,
        initial_adopters=(
            (1, StrategyId.COMPLEMENT, 0.1),
            (2, StrategyId.SUBSTITUTE, 0.1),
        ),
    )
    return Preset(
        ExperimentConfig(
            name="suppfig2", base=base, sweep=(), repetitions=50,
            master_seed=DEFAULT_MASTER_SEED, outputs=("aggregates", "summary"),
        )
    )


def growth() -> Preset:
    """Homogeneous no-AI baseline run (growth-rate reference)."""
    base = _single_population(initial_adopters=())
    return Preset(
        ExperimentConfig(
            name="growth", base=base, sweep=(), repetitions=1,
            master_seed=DEFAULT_MASTER_SEED, outputs=("aggregates", "summary"),
        )
    )


PRESETS = {
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
    "fig7a": fig7a,
    "fig7c": fig7c,
    "suppfig2": suppfig2,
    "growth": growth,
}


def load_preset(name: str) -> Preset:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown experiment preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return builder()
