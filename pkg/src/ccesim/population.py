"""Population dynamics: the iterated learning / adoption loop.

Each iteration has two phases. In the learning phase every agent copies
the highest-skilled member of its own group and draws a fresh skill from
its strategy's Gumbel learning distribution (synchronously, all from the
same pre-phase maximum). In the adoption phase every agent samples one
partner, in-group with probability ``in_group_rate``, and switches to the
partner's pre-phase strategy with logistic probability in the skill gap.

Agents are stored in group-contiguous numpy arrays so both phases are a
handful of vectorized operations per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .model import (
    Agent,
    AIEffects,
    BaseLearningParams,
    ConfigError,
    STRATEGIES,
    StrategyId,
    StrategyParams,
    _require,
    gumbel_from_uniform,
    logistic,
    strategy_param_table,
)

_MASK64 = (1 << 64) - 1

AdopterSpec = tuple[int, StrategyId, float]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def normalize_adopters(raw) -> tuple[AdopterSpec, ...]:
    """Coerce (group, strategy, fraction) triples; strategy accepts tokens."""
    adopters = []
    for entry in raw:
        if len(entry) != 3:
            raise ConfigError(
                "initial_adopters entries are [group, strategy, fraction] triples"
            )
        group, strategy, fraction = entry
        if isinstance(strategy, str):
            strategy = StrategyId.from_token(strategy)
        elif not isinstance(strategy, StrategyId):
            strategy = StrategyId(int(strategy))
        adopters.append((int(group), strategy, float(fraction)))
    return tuple(adopters)


def largest_remainder_counts(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` proportional to ``weights``.

    Floors the quotas, then hands the remaining units to the largest
    fractional parts; ties break toward the lowest index.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or len(weights) == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    quotas = weights * (total / weights.sum())
    counts = np.floor(quotas).astype(np.int64)
    remainder = total - int(counts.sum())
    if remainder > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


@dataclass(frozen=True)
class PopulationConfig:
    """Complete description of one simulation run."""

    n: int = 1000
    m: int = 1
    base: BaseLearningParams = field(default_factory=lambda: BaseLearningParams(1.0, 0.5))
    effects: AIEffects = field(default_factory=lambda: AIEffects(0.2, 0.05, 0.5, 0.5))
    delta: float = 10.0
    steps: int = 1000
    in_group_rate: float = 1.0
    initial_adopters: tuple[AdopterSpec, ...] = ((-1, StrategyId.COMPLEMENT, 0.1),)
    equal_sizes: bool = False
    allow_unordered_effects: bool = False
    # When set, in_group_rate gates the learning neighbourhood as well as
    # adoption partners: each agent learns from its own group's best member
    # with probability in_group_rate and from the population-wide best
    # otherwise, so rate 0 is a fully mixed learning pool and rate 1 a
    # strict group boundary. Default keeps learning strictly within groups.
    gated_learning: bool = False
    seed: int = 0

    def validate(self) -> None:
        _require(isinstance(self.n, int) and self.n >= 2, "n", "must be an integer >= 2")
        _require(isinstance(self.m, int) and self.m >= 1, "m", "must be an integer >= 1")
        _require(
            isinstance(self.steps, int) and self.steps >= 0,
            "steps",
            "must be an integer >= 0",
        )
        _require(
            math.isfinite(self.delta) and self.delta > 0, "delta", "must be > 0"
        )
        _require(
            0.0 <= self.in_group_rate <= 1.0, "in_group_rate", "must be in [0, 1]"
        )
        _require(isinstance(self.seed, int), "seed", "must be an integer")
        if not self.allow_unordered_effects and not self.effects.is_ordered:
            raise ConfigError(
                "effects must satisfy r_alpha_s > r_alpha_c and r_beta_s > r_beta_c; "
                "set allow_unordered_effects to relax this for sweeps"
            )
        per_group = np.zeros(self.m, dtype=np.float64)
        for entry in self.initial_adopters:
            group, strategy, fraction = entry
            _require(
                isinstance(group, int) and (group == -1 or 0 <= group < self.m),
                "initial_adopters.group",
                f"must be -1 or in [0, {self.m}); got {group}",
            )
            _require(
                isinstance(strategy, StrategyId),
                "initial_adopters.strategy",
                f"must be a StrategyId; got {strategy!r}",
            )
            _require(
                0.0 <= fraction <= 1.0,
                "initial_adopters.fraction",
                f"must be in [0, 1]; got {fraction}",
            )
            if group == -1:
                per_group += fraction
            else:
                per_group[group] += fraction
        if np.any(per_group > 1.0 + 1e-12):
            raise ConfigError(
                "initial_adopters fractions must sum to <= 1 per group "
                "(the remainder stays NoAI)"
            )

    def param_table(self) -> tuple[np.ndarray, np.ndarray]:
        return strategy_param_table(self.base, self.effects)


class PopulationState:
    """Mutable simulation state: agent arrays plus the run's random stream.

    Agents occupy group-contiguous index blocks; ``group_starts`` and
    ``group_sizes`` describe the blocks. The arrays are replaced (never
    mutated in place) by the phase functions; the random stream is the
    only stateful member and must be owned by a single thread.
    """

    __slots__ = ("step", "skills", "strategies", "groups", "group_starts", "group_sizes", "rng")

    def __init__(self, step, skills, strategies, groups, group_starts, group_sizes, rng):
        self.step = step
        self.skills = skills
        self.strategies = strategies
        self.groups = groups
        self.group_starts = group_starts
        self.group_sizes = group_sizes
        self.rng = rng

    @property
    def n(self) -> int:
        return len(self.skills)

    @property
    def m(self) -> int:
        return len(self.group_sizes)

    def agents(self) -> list[Agent]:
        return [
            Agent(float(z), StrategyId(int(s)), int(g))
            for z, s, g in zip(self.skills, self.strategies, self.groups)
        ]

    def strategy_shares(self) -> np.ndarray:
        return np.bincount(self.strategies, minlength=3) / self.n

    def _evolved(self, skills, strategies) -> "PopulationState":
        return PopulationState(
            self.step, skills, strategies, self.groups,
            self.group_starts, self.group_sizes, self.rng,
        )


def init_population(config: PopulationConfig) -> PopulationState:
    """Build the step-0 state: group assignment, seeded adopters, zero skills.

    With ``equal_sizes`` groups get largest-remainder equal counts;
    otherwise each agent joins a uniformly random group. Within each
    group the configured adopter fraction (rounded to nearest, at least
    one agent when the fraction is positive) receives the seed strategy
    and everyone else starts with NoAI. Group index -1 seeds every group.
    """
    config.validate()
    rng = np.random.default_rng(config.seed & _MASK64)
    n, m = config.n, config.m
    if m == 1:
        sizes = np.array([n], dtype=np.int64)
    elif config.equal_sizes:
        sizes = largest_remainder_counts(np.ones(m), n)
    else:
        draws = rng.integers(0, m, size=n)
        sizes = np.bincount(draws, minlength=m).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    groups = np.repeat(np.arange(m, dtype=np.int64), sizes)

    strategies = np.zeros(n, dtype=np.int64)
    fill = starts.copy()
    for group, strategy, fraction in config.initial_adopters:
        targets = range(m) if group == -1 else (group,)
        for g in targets:
            size = int(sizes[g])
            if size == 0:
                continue
            k = _round_half_up(fraction * size)
            if fraction > 0:
                k = max(k, 1)
            k = min(k, int(starts[g]) + size - int(fill[g]))
            if k > 0:
                strategies[int(fill[g]): int(fill[g]) + k] = int(strategy)
                fill[g] += k

    skills = np.zeros(n, dtype=np.float64)
    return PopulationState(0, skills, strategies, groups, starts, sizes, rng)


def _group_maxima(skills: np.ndarray, starts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    maxima = np.empty(len(sizes), dtype=np.float64)
    for g in range(len(sizes)):
        s, size = int(starts[g]), int(sizes[g])
        maxima[g] = skills[s: s + size].max() if size else -np.inf
    return maxima


def _learning_kernel(
    state: PopulationState,
    alphas: np.ndarray,
    betas: np.ndarray,
    gate_rate: float | None = None,
) -> np.ndarray:
    """One synchronous learning step: each agent redraws its skill around
    the pre-phase maximum of its learning neighbourhood.

    The neighbourhood is the agent's own group. With ``gate_rate`` set
    (gated-learning runs, several groups), it is the own group with that
    probability and the whole population otherwise.
    """
    maxima = _group_maxima(state.skills, state.group_starts, state.group_sizes)
    model = np.repeat(maxima, state.group_sizes)
    if gate_rate is not None and state.m > 1:
        u_scope = state.rng.random(state.n)
        model = np.where(u_scope < gate_rate, model, maxima.max())
    u = state.rng.random(state.n)
    return gumbel_from_uniform(u, model - alphas[state.strategies], betas[state.strategies])


def _adoption_kernel(
    state: PopulationState, delta: float, in_group_rate: float
) -> np.ndarray:
    n = state.n
    skills, strategies = state.skills, state.strategies
    rng = state.rng
    if state.m == 1:
        r = rng.integers(0, n - 1, size=n)
        partner = r + (r >= np.arange(n))
    else:
        own_start = state.group_starts[state.groups]
        own_size = state.group_sizes[state.groups]
        u_scope = rng.random(n)
        in_scope = u_scope < in_group_rate
        in_scope |= own_size == n      # no out-group to fall back on
        in_scope &= own_size >= 2      # singleton groups must look outside
        high = np.where(in_scope, own_size - 1, n - own_size)
        r = rng.integers(0, high)
        offset = np.arange(n) - own_start
        partner_in = own_start + r + (r >= offset)
        partner_out = r + np.where(r >= own_start, own_size, 0)
        partner = np.where(in_scope, partner_in, partner_out)
    accept = rng.random(n) < logistic(delta * (skills[partner] - skills))
    return np.where(accept, strategies[partner], strategies)


def learning_phase(
    state: PopulationState, params: Mapping[StrategyId, StrategyParams]
) -> PopulationState:
    """Synchronous learning step: every agent redraws its skill around the
    pre-phase maximum of its own group (the best agent re-learns too)."""
    alphas = np.array([params[s].alpha_s for s in STRATEGIES])
    betas = np.array([params[s].beta_s for s in STRATEGIES])
    return state._evolved(_learning_kernel(state, alphas, betas), state.strategies)


def adoption_phase(state: PopulationState, config: PopulationConfig) -> PopulationState:
    """Synchronous strategy adoption against pre-phase strategies."""
    new_strategies = _adoption_kernel(state, config.delta, config.in_group_rate)
    return state._evolved(state.skills, new_strategies)


@dataclass(frozen=True)
class ScopeStats:
    """Skill summary and strategy shares for one scope at one step."""

    median_skill: float
    mean_skill: float
    max_skill: float
    skill_var: float
    shares: tuple[float, float, float]


@dataclass(frozen=True)
class StepRecord:
    """Per-step statistics for the whole population and each group."""

    step: int
    scopes: dict[str, ScopeStats]


class RunResult:
    """Array-backed trajectory of per-step statistics.

    ``scope_names[0]`` is always ``population``; group scopes follow when
    recorded. Stat arrays have shape (steps + 1, n_scopes); shares add a
    trailing strategy axis in StrategyId order.
    """

    def __init__(self, config, scope_names, median, mean, max_, var, shares):
        self.config = config
        self.scope_names = scope_names
        self.median = median
        self.mean = mean
        self.max = max_
        self.var = var
        self.shares = shares

    @property
    def n_steps(self) -> int:
        return self.median.shape[0] - 1

    @property
    def population_median(self) -> np.ndarray:
        return self.median[:, 0]

    @property
    def population_max(self) -> np.ndarray:
        return self.max[:, 0]

    @property
    def population_shares(self) -> np.ndarray:
        return self.shares[:, 0, :]

    @property
    def final_shares(self) -> np.ndarray:
        return self.shares[-1, 0, :]

    def step_records(self) -> list[StepRecord]:
        records = []
        for t in range(self.median.shape[0]):
            scopes = {
                name: ScopeStats(
                    float(self.median[t, i]),
                    float(self.mean[t, i]),
                    float(self.max[t, i]),
                    float(self.var[t, i]),
                    tuple(float(x) for x in self.shares[t, i]),
                )
                for i, name in enumerate(self.scope_names)
            }
            records.append(StepRecord(t, scopes))
        return records

    def rows(self) -> Iterable[tuple]:
        """(step, scope, median, mean, max, var, share0, shareC, shareS) rows."""
        for t in range(self.median.shape[0]):
            for i, name in enumerate(self.scope_names):
                yield (
                    t, name,
                    float(self.median[t, i]), float(self.mean[t, i]),
                    float(self.max[t, i]), float(self.var[t, i]),
                    float(self.shares[t, i, 0]), float(self.shares[t, i, 1]),
                    float(self.shares[t, i, 2]),
                )


def _record(state, out, t, record_groups):
    skills, strategies = state.skills, state.strategies
    median, mean, max_, var, shares = out
    median[t, 0] = np.median(skills)
    mean[t, 0] = skills.mean()
    max_[t, 0] = skills.max()
    var[t, 0] = skills.var()
    shares[t, 0] = np.bincount(strategies, minlength=3) / state.n
    if not record_groups:
        return
    if state.m == 1:
        median[t, 1] = median[t, 0]
        mean[t, 1] = mean[t, 0]
        max_[t, 1] = max_[t, 0]
        var[t, 1] = var[t, 0]
        shares[t, 1] = shares[t, 0]
        return
    for g in range(state.m):
        s, size = int(state.group_starts[g]), int(state.group_sizes[g])
        col = g + 1
        if size == 0:
            median[t, col] = mean[t, col] = max_[t, col] = var[t, col] = np.nan
            shares[t, col] = np.nan
            continue
        block = skills[s: s + size]
        median[t, col] = np.median(block)
        mean[t, col] = block.mean()
        max_[t, col] = block.max()
        var[t, col] = block.var()
        shares[t, col] = np.bincount(strategies[s: s + size], minlength=3) / size


def run(config: PopulationConfig, record_groups: bool = True) -> RunResult:
    """Run ``config.steps`` iterations of (learning, adoption).

    Records statistics for the initial state and after every iteration,
    so the result holds ``steps + 1`` records. Fully deterministic for a
    given seed.
    """
    state = init_population(config)
    alphas, betas = config.param_table()
    n_scopes = 1 + config.m if record_groups else 1
    scope_names = ("population",) + (
        tuple(f"group_{g}" for g in range(config.m)) if record_groups else ()
    )
    shape = (config.steps + 1, n_scopes)
    out = (
        np.empty(shape), np.empty(shape), np.empty(shape), np.empty(shape),
        np.empty(shape + (3,)),
    )
    gate_rate = config.in_group_rate if config.gated_learning else None
    _record(state, out, 0, record_groups)
    for t in range(1, config.steps + 1):
        new_skills = _learning_kernel(state, alphas, betas, gate_rate)
        state = state._evolved(new_skills, state.strategies)
        new_strategies = _adoption_kernel(state, config.delta, config.in_group_rate)
        state = state._evolved(state.skills, new_strategies)
        state.step = t
        _record(state, out, t, record_groups)
    return RunResult(config, scope_names, *out)
