"""Cumulative cultural evolution simulator.

Library + CLI for iterated social-learning populations under three
AI-use strategies, replicator-dynamics selection analysis on the
strategy simplex, and batch experiment orchestration with bit-stable
CSV outputs.
"""

from .model import (
    EULER_GAMMA,
    Agent,
    AIEffects,
    BaseLearningParams,
    ConfigError,
    STRATEGIES,
    StrategyId,
    StrategyParams,
    adoption_probability,
    derive_strategy_params,
    gumbel_mean,
    gumbel_variance,
    expected_group_maximum,
    sample_learning_outcome,
)
from .population import (
    PopulationConfig,
    PopulationState,
    RunResult,
    ScopeStats,
    StepRecord,
    adoption_phase,
    init_population,
    largest_remainder_counts,
    learning_phase,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "EULER_GAMMA",
    "Agent",
    "AIEffects",
    "BaseLearningParams",
    "ConfigError",
    "STRATEGIES",
    "StrategyId",
    "StrategyParams",
    "adoption_probability",
    "derive_strategy_params",
    "gumbel_mean",
    "gumbel_variance",
    "expected_group_maximum",
    "sample_learning_outcome",
    "PopulationConfig",
    "PopulationState",
    "RunResult",
    "ScopeStats",
    "StepRecord",
    "adoption_phase",
    "init_population",
    "largest_remainder_counts",
    "learning_phase",
    "run",
    "__version__",
]
