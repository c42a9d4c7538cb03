"""Core model primitives.

Defines the three AI-use strategies with their effective learning
parameters, the extreme-value (Gumbel) sampler for social-learning
outcomes, and the logistic payoff-biased adoption rule. Everything here
is a pure function of its inputs plus, where sampling is involved, a
caller-owned random stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015329

# Uniform draws are clamped to [_U_EPS, 1 - _U_EPS] before the inverse
# transform so sampled outcomes are always finite.
_U_EPS = 2.0 ** -52


class ConfigError(ValueError):
    """A configuration value violates a model invariant."""


class StrategyId(enum.IntEnum):
    """AI-use strategy. The numeric order is fixed for serialization."""

    NOAI = 0
    COMPLEMENT = 1
    SUBSTITUTE = 2

    @property
    def token(self) -> str:
        return _STRATEGY_TOKENS[self]

    @classmethod
    def from_token(cls, token: str) -> "StrategyId":
        try:
            return _STRATEGY_FROM_TOKEN[token.strip().lower()]
        except KeyError:
            raise ConfigError(
                f"unknown strategy {token!r}; expected one of "
                f"{sorted(_STRATEGY_FROM_TOKEN)}"
            ) from None


_STRATEGY_TOKENS = {
    StrategyId.NOAI: "noai",
    StrategyId.COMPLEMENT: "complement",
    StrategyId.SUBSTITUTE: "substitute",
}
_STRATEGY_FROM_TOKEN = {v: k for k, v in _STRATEGY_TOKENS.items()}

STRATEGIES = (StrategyId.NOAI, StrategyId.COMPLEMENT, StrategyId.SUBSTITUTE)


def _require(condition: bool, field: str, constraint: str) -> None:
    if not condition:
        raise ConfigError(f"{field} {constraint}")


@dataclass(frozen=True)
class BaseLearningParams:
    """Baseline learning parameters shared by every strategy.

    alpha: average learning error (skill units), strictly positive.
    beta: dispersion of learning outcomes (skill units), strictly positive.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        _require(math.isfinite(self.alpha) and self.alpha > 0, "alpha", "must be > 0")
        _require(math.isfinite(self.beta) and self.beta > 0, "beta", "must be > 0")


@dataclass(frozen=True)
class AIEffects:
    """Proportional reductions of (alpha, beta) for the two AI strategies.

    All four values live in [0, 1). The usual assumption that the
    Substitute strategy reduces both parameters more strongly than the
    Complement strategy is not enforced here; population configs check it
    unless explicitly relaxed for parameter sweeps.
    """

    r_alpha_c: float
    r_beta_c: float
    r_alpha_s: float
    r_beta_s: float

    def __post_init__(self) -> None:
        for field in ("r_alpha_c", "r_beta_c", "r_alpha_s", "r_beta_s"):
            value = getattr(self, field)
            _require(
                math.isfinite(value) and 0.0 <= value < 1.0, field, "must be in [0, 1)"
            )

    @property
    def is_ordered(self) -> bool:
        """True when Substitute reductions strictly exceed Complement ones."""
        return self.r_alpha_s > self.r_alpha_c and self.r_beta_s > self.r_beta_c


@dataclass(frozen=True)
class StrategyParams:
    """Effective (alpha_s, beta_s) learning parameters of one strategy."""

    strategy: StrategyId
    alpha_s: float
    beta_s: float

    def __post_init__(self) -> None:
        _require(self.alpha_s > 0, "alpha_s", "must be > 0")
        _require(self.beta_s > 0, "beta_s", "must be > 0")


@dataclass(frozen=True)
class Agent:
    """One individual: current skill, AI-use strategy, group membership."""

    skill: float
    strategy: StrategyId
    group: int

    def __post_init__(self) -> None:
        _require(math.isfinite(self.skill), "skill", "must be finite")
        _require(self.group >= 0, "group", "must be >= 0")


def derive_strategy_params(
    base: BaseLearningParams, effects: AIEffects, s: StrategyId
) -> StrategyParams:
    """Effective learning parameters for strategy ``s``.

    NoAI keeps the baseline; Complement and Substitute scale it down by
    their respective proportional reductions.
    """
    if s is StrategyId.NOAI or s == StrategyId.NOAI:
        return StrategyParams(StrategyId.NOAI, base.alpha, base.beta)
    if s == StrategyId.COMPLEMENT:
        return StrategyParams(
            StrategyId.COMPLEMENT,
            base.alpha * (1.0 - effects.r_alpha_c),
            base.beta * (1.0 - effects.r_beta_c),
        )
    if s == StrategyId.SUBSTITUTE:
        return StrategyParams(
            StrategyId.SUBSTITUTE,
            base.alpha * (1.0 - effects.r_alpha_s),
            base.beta * (1.0 - effects.r_beta_s),
        )
    raise ConfigError(f"strategy must be a StrategyId, got {s!r}")


def strategy_param_table(
    base: BaseLearningParams, effects: AIEffects
) -> tuple[np.ndarray, np.ndarray]:
    """(alpha_by_strategy, beta_by_strategy) arrays indexed by StrategyId."""
    params = [derive_strategy_params(base, effects, s) for s in STRATEGIES]
    alphas = np.array([p.alpha_s for p in params], dtype=np.float64)
    betas = np.array([p.beta_s for p in params], dtype=np.float64)
    return alphas, betas


def gumbel_from_uniform(u, mode, scale):
    """Inverse-transform Gumbel (max type) draw: mode - scale*ln(-ln u).

    ``u`` is clamped away from 0 and 1 so the result is finite for every
    representable input. Accepts scalars or numpy arrays.
    """
    u = np.clip(u, _U_EPS, 1.0 - _U_EPS)
    return mode - scale * np.log(-np.log(u))


def sample_learning_outcome(
    model_skill: float, params: StrategyParams, rng: np.random.Generator
) -> float:
    """One post-learning skill draw for a learner copying ``model_skill``.

    The outcome is Gumbel with mode ``model_skill - alpha_s`` and
    dispersion ``beta_s``: the best of several imperfect attempts.
    """
    u = rng.random()
    return float(gumbel_from_uniform(u, model_skill - params.alpha_s, params.beta_s))


def gumbel_mean(mode: float, scale: float) -> float:
    """Analytic mean of a max-type Gumbel distribution."""
    return mode + EULER_GAMMA * scale


def gumbel_variance(scale: float) -> float:
    """Analytic variance of a Gumbel distribution."""
    return (math.pi * scale) ** 2 / 6.0


def expected_group_maximum(model_skill: float, alpha: float, beta: float, n: int) -> float:
    """Expected maximum of ``n`` independent learning draws.

    The Gumbel family is max-stable: the maximum of n draws with mode mu
    and scale beta is Gumbel(mu + beta*ln n, beta), whose mean is
    mu + beta*(ln n + gamma).
    """
    return model_skill - alpha + beta * (math.log(n) + EULER_GAMMA)


def adoption_probability(z_k: float, z_i: float, delta: float) -> float:
    """Probability that agent i adopts partner k's strategy.

    Logistic in the skill difference with steepness ``delta``. The
    branched form never exponentiates a positive argument, so extreme
    skill gaps saturate to 0.0 / 1.0 instead of overflowing, and
    p(a, b) + p(b, a) == 1.0 holds exactly.
    """
    if delta <= 0:
        raise ConfigError("delta must be > 0")
    d = delta * (z_k - z_i)
    if d >= 0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def logistic(x):
    """Numerically stable elementwise logistic for numpy arrays."""
    x = np.asarray(x, dtype=np.float64)
    t = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
