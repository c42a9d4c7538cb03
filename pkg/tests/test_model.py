"""Core-model unit tests: strategy parameters, Gumbel sampler, adoption rule."""

import math

import numpy as np
import pytest
from scipy import stats

from ccesim.model import (
    EULER_GAMMA,
    AIEffects,
    BaseLearningParams,
    ConfigError,
    STRATEGIES,
    StrategyId,
    StrategyParams,
    adoption_probability,
    derive_strategy_params,
    gumbel_from_uniform,
    gumbel_mean,
    gumbel_variance,
    logistic,
    sample_learning_outcome,
)

BASE = BaseLearningParams(alpha=1.0, beta=0.5)
FIG4_EFFECTS = AIEffects(r_alpha_c=0.2, r_beta_c=0.05, r_alpha_s=0.5, r_beta_s=0.5)


class TestStrategyId:
    def test_exactly_three_ordered_values(self):
        assert [s.value for s in StrategyId] == [0, 1, 2]
        assert StrategyId.NOAI < StrategyId.COMPLEMENT < StrategyId.SUBSTITUTE

    def test_token_round_trip(self):
        for s in STRATEGIES:
            assert StrategyId.from_token(s.token) is s
        assert StrategyId.from_token("Complement") is StrategyId.COMPLEMENT

    def test_unknown_token_rejected(self):
        with pytest.raises(ConfigError, match="unknown strategy"):
            StrategyId.from_token("oracle")


class TestParamValidation:
    @pytest.mark.parametrize("alpha,beta", [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, -0.1)])
    def test_base_params_positive(self, alpha, beta):
        with pytest.raises(ConfigError):
            BaseLearningParams(alpha, beta)

    @pytest.mark.parametrize("field", ["r_alpha_c", "r_beta_c", "r_alpha_s", "r_beta_s"])
    @pytest.mark.parametrize("bad", [-0.01, 1.0, 1.5, float("nan")])
    def test_effects_in_unit_interval(self, field, bad):
        kwargs = dict(r_alpha_c=0.2, r_beta_c=0.05, r_alpha_s=0.5, r_beta_s=0.5)
        kwargs[field] = bad
        with pytest.raises(ConfigError, match=field):
            AIEffects(**kwargs)

    def test_ordering_flag(self):
        assert FIG4_EFFECTS.is_ordered
        assert not AIEffects(0.2, 0.4, 0.2, 0.5).is_ordered

    def test_strategy_params_positive(self):
        with pytest.raises(ConfigError):
            StrategyParams(StrategyId.NOAI, 0.0, 0.5)


class TestDeriveStrategyParams:
    def test_noai_identity(self):
        p = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.NOAI)
        assert (p.alpha_s, p.beta_s) == (1.0, 0.5)

    def test_complement_scaling(self):
        p = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.COMPLEMENT)
        assert p.alpha_s == pytest.approx(0.8, abs=1e-15)
        assert p.beta_s == pytest.approx(0.475, abs=1e-15)

    def test_substitute_scaling(self):
        p = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.SUBSTITUTE)
        assert p.alpha_s == pytest.approx(0.5, abs=1e-15)
        assert p.beta_s == pytest.approx(0.25, abs=1e-15)

    def test_deterministic_and_pure(self):
        a = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.SUBSTITUTE)
        b = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.SUBSTITUTE)
        assert a == b


class TestGumbelSampler:
    def test_empirical_mean(self):
        # analytic mean: mode + gamma*scale = -1 + 0.5772...*0.5
        params = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.NOAI)
        rng = np.random.default_rng(101)
        draws = gumbel_from_uniform(rng.random(10**6), 0.0 - params.alpha_s, params.beta_s)
        assert draws.mean() == pytest.approx(-0.7113921675492336, abs=0.01)

    def test_empirical_median(self):
        # analytic median: mode - scale*ln(ln 2) = 4.183256460290832
        rng = np.random.default_rng(202)
        draws = gumbel_from_uniform(rng.random(10**6), 5.0 - 1.0, 0.5)
        assert np.median(draws) == pytest.approx(4.183256460290832, abs=0.01)

    def test_degenerate_dispersion_limit(self):
        params = StrategyParams(StrategyId.NOAI, 1.0, 1e-9)
        rng = np.random.default_rng(3)
        for _ in range(100):
            assert abs(sample_learning_outcome(0.0, params, rng) - (-1.0)) < 1e-6

    def test_always_finite_at_uniform_extremes(self):
        out = gumbel_from_uniform(np.array([0.0, 1.0, 0.5]), 0.0, 1.0)
        assert np.all(np.isfinite(out))

    def test_mean_within_five_standard_errors(self):
        n = 10**6
        params = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.COMPLEMENT)
        rng = np.random.default_rng(404)
        draws = gumbel_from_uniform(
            rng.random(n), 2.0 - params.alpha_s, params.beta_s
        )
        expected = gumbel_mean(2.0 - params.alpha_s, params.beta_s)
        se = params.beta_s * math.pi / math.sqrt(6 * n)
        assert abs(draws.mean() - expected) < 5 * se

    def test_variance_within_five_percent(self):
        n = 10**6
        rng = np.random.default_rng(505)
        draws = gumbel_from_uniform(rng.random(n), 0.0, 0.5)
        expected = gumbel_variance(0.5)
        assert expected == pytest.approx(0.4112335167120566, rel=1e-12)
        assert draws.var() == pytest.approx(expected, rel=0.05)

    def test_distribution_shape_against_reference(self):
        # two-sided KS against the scipy Gumbel CDF (independent implementation)
        rng = np.random.default_rng(606)
        draws = gumbel_from_uniform(rng.random(20000), 1.5, 0.7)
        result = stats.kstest(draws, stats.gumbel_r(loc=1.5, scale=0.7).cdf)
        assert result.pvalue > 0.01

    def test_scalar_matches_vector_path(self):
        params = derive_strategy_params(BASE, FIG4_EFFECTS, StrategyId.SUBSTITUTE)
        draws = [
            sample_learning_outcome(3.0, params, np.random.default_rng(9))
            for _ in range(3)
        ]
        rng = np.random.default_rng(9)
        vec = gumbel_from_uniform(rng.random(1), 3.0 - params.alpha_s, params.beta_s)
        assert draws[0] == pytest.approx(float(vec[0]), abs=0.0)

    def test_expected_outcome_ordering_for_reference_effects(self):
        # E[draw] = model - alpha_s + gamma*beta_s; the Substitute mean tops
        # the Complement mean, which tops NoAI, whenever the error reductions
        # dominate the dispersion penalty.
        means = {
            s: gumbel_mean(-derive_strategy_params(BASE, FIG4_EFFECTS, s).alpha_s,
                           derive_strategy_params(BASE, FIG4_EFFECTS, s).beta_s)
            for s in STRATEGIES
        }
        gain_c = BASE.alpha * FIG4_EFFECTS.r_alpha_c - EULER_GAMMA * BASE.beta * FIG4_EFFECTS.r_beta_c
        gain_s = BASE.alpha * FIG4_EFFECTS.r_alpha_s - EULER_GAMMA * BASE.beta * FIG4_EFFECTS.r_beta_s
        assert gain_s > gain_c > 0
        assert means[StrategyId.SUBSTITUTE] > means[StrategyId.COMPLEMENT] > means[StrategyId.NOAI]


class TestAdoptionProbability:
    def test_equal_skills_give_half(self):
        assert adoption_probability(3.0, 3.0, 10.0) == 0.5

    def test_saturation(self):
        assert adoption_probability(10.0, 0.0, 10.0) == 1.0
        assert adoption_probability(0.0, 10.0, 10.0) == pytest.approx(0.0, abs=1e-40)

    def test_closed_form_value(self):
        assert adoption_probability(0.1, 0.0, 10.0) == pytest.approx(
            0.7310585786300049, rel=1e-15
        )

    def test_no_overflow_at_extreme_gaps(self):
        assert adoption_probability(1e308, -1e308, 10.0) == 1.0
        assert adoption_probability(-1e308, 1e308, 10.0) == 0.0

    def test_complement_symmetry(self):
        rng = np.random.default_rng(42)
        for _ in range(10**4):
            a, b = rng.normal(0, 50, size=2)
            s = adoption_probability(a, b, 10.0) + adoption_probability(b, a, 10.0)
            assert abs(s - 1.0) <= 1e-12

    def test_monotonicity(self):
        zs = [-5.0, -1.0, 0.0, 0.3, 2.0, 7.0]
        probs = [adoption_probability(z, 0.0, 3.0) for z in zs]
        assert probs == sorted(probs)
        probs_i = [adoption_probability(0.0, z, 3.0) for z in zs]
        assert probs_i == sorted(probs_i, reverse=True)

    def test_delta_must_be_positive(self):
        with pytest.raises(ConfigError):
            adoption_probability(1.0, 0.0, 0.0)

    def test_vectorized_logistic_matches_scalar(self):
        # math.exp and numpy's vectorized exp may differ by one ulp
        rng = np.random.default_rng(7)
        d = rng.normal(0, 30, size=200)
        vec = logistic(10.0 * d)
        for di, vi in zip(d, vec):
            assert adoption_probability(di, 0.0, 10.0) == pytest.approx(float(vi), rel=1e-14)
