"""Experiment orchestration tests: sweeps, seeds, aggregation, analyses."""

import numpy as np
import pytest

from ccesim.experiments import (
    AggregateRecord,
    ExperimentConfig,
    crossover_generation,
    dominance_threshold,
    find_crossover,
    run_experiment,
    set_config_value,
    skill_heatmap,
    axis,
)
from ccesim.model import AIEffects, BaseLearningParams, ConfigError, StrategyId
from ccesim.population import PopulationConfig, run
from ccesim.seeds import seed_for


def small_population(**overrides):
    defaults = dict(
        n=60, m=1, base=BaseLearningParams(1.0, 0.5),
        effects=AIEffects(0.2, 0.05, 0.5, 0.5), delta=10.0, steps=20,
        initial_adopters=((-1, StrategyId.COMPLEMENT, 0.1),), seed=5,
    )
    defaults.update(overrides)
    return PopulationConfig(**defaults)


def small_experiment(**overrides):
    defaults = dict(
        name="unit", base=small_population(), sweep=(), repetitions=3, master_seed=77,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestSweepMechanics:
    def test_set_nested_and_flat_paths(self):
        cfg = small_population()
        assert set_config_value(cfg, "in_group_rate", 0.5).in_group_rate == 0.5
        assert set_config_value(cfg, "base.alpha", 2.0).base.alpha == 2.0
        assert set_config_value(cfg, "effects.r_beta_s", 0.9).effects.r_beta_s == 0.9

    def test_unknown_path_rejected(self):
        with pytest.raises(ConfigError, match="unknown sweep path"):
            set_config_value(small_population(), "gibberish", 1)
        with pytest.raises(ConfigError, match="unknown sweep path"):
            set_config_value(small_population(), "base.nope", 1)

    def test_cartesian_point_count_and_coords(self):
        exp = small_experiment(
            sweep=(
                axis("delta", (5.0, 10.0)),
                axis("in_group_rate", (0.2, 0.5, 0.9)),
            )
        )
        assert exp.point_count() == 6
        assert exp.coords_at(0) == (5.0, 0.2)
        assert exp.coords_at(5) == (10.0, 0.9)
        assert exp.config_at(4).delta == 10.0
        assert exp.config_at(4).in_group_rate == 0.5

    def test_multi_path_arm_axis(self):
        arms = axis(
            ("m", "in_group_rate"), ((3, 0.85), (1, 1.0)),
            labels=("structured", "mixed"), name="arm",
        )
        exp = small_experiment(sweep=(arms,))
        assert exp.config_at(0).m == 3
        assert exp.config_at(1).m == 1
        assert exp.point_labels() == ["structured", "mixed"]
        assert exp.coord_columns() == ("arm",)

    def test_budget_enforced(self):
        exp = small_experiment(repetitions=10, budget=5)
        with pytest.raises(ConfigError, match="budget"):
            exp.validate()

    def test_crossover_labels_validated(self):
        exp = small_experiment(crossover_arms=("up", "down"))
        with pytest.raises(ConfigError, match="not a sweep label"):
            exp.validate()


class TestSeeds:
    def test_seed_stability_under_axis_growth(self):
        short = small_experiment(sweep=(axis("delta", (5.0, 10.0)),))
        longer = small_experiment(sweep=(axis("delta", (5.0, 10.0, 20.0)),))
        for point in range(2):
            for rep in range(3):
                assert short.seed_at(point, rep) == longer.seed_at(point, rep)

    def test_seed_hash_spreads(self):
        seeds = {seed_for(1, 2, i, j) for i in range(10) for j in range(10)}
        assert len(seeds) == 100

    def test_domain_separation(self):
        assert seed_for(1, 2, 3) != seed_for(1, 3, 2)


class TestRunExperiment:
    def test_single_repetition_matches_direct_run(self):
        exp = small_experiment(repetitions=1)
        record = run_experiment(exp)[0]
        direct = run(
            small_population(seed=exp.seed_at(0, 0)), record_groups=False
        )
        assert np.array_equal(record.median_of_medians, direct.population_median)
        assert np.array_equal(record.mean_shares, direct.population_shares)
        assert np.all(record.median_se == 0.0)

    def test_thread_count_does_not_change_results(self):
        exp = small_experiment(
            repetitions=4, sweep=(axis("delta", (5.0, 10.0)),)
        )
        serial = run_experiment(exp, threads=1)
        parallel = run_experiment(exp, threads=2)
        for a, b in zip(serial, parallel):
            assert np.array_equal(a.median_of_medians, b.median_of_medians)
            assert np.array_equal(a.mean_shares, b.mean_shares)
            assert a.dominant_count == b.dominant_count

    def test_record_count_matches_cartesian_product(self):
        exp = small_experiment(
            sweep=(axis("delta", (5.0, 10.0)), axis("n", (40, 60, 80)))
        )
        assert len(run_experiment(exp)) == 6

    def test_dominance_counts(self):
        exp = small_experiment(
            repetitions=5,
            base=small_population(initial_adopters=((-1, StrategyId.SUBSTITUTE, 1.0),)),
        )
        record = run_experiment(exp)[0]
        assert record.dominant_count == (0, 0, 5)
        assert record.final_dominant == "substitute"
        assert record.none_count == 0


class TestCrossover:
    def test_debounced_crossover(self):
        b = np.zeros(40)
        a = np.full(40, -1.0)
        a[5] = 0.5        # a one-step blip must not count
        a[12:] = 1.0      # the sustained crossing starts at 12
        assert crossover_generation(a, b, window=10) == 12

    def test_no_crossover_returns_none(self):
        assert crossover_generation(np.zeros(30), np.ones(30)) is None

    def test_window_truncated_at_series_end(self):
        b = np.zeros(20)
        a = np.concatenate([np.full(15, -1.0), np.ones(5)])
        assert crossover_generation(a, b, window=10) == 15

    def test_find_crossover_by_label(self):
        exp = small_experiment(
            repetitions=2,
            sweep=(
                axis(
                    "initial_adopters",
                    (
                        ((-1, StrategyId.COMPLEMENT, 0.1),),
                        ((-1, StrategyId.SUBSTITUTE, 0.1),),
                    ),
                    labels=("complement", "substitute"),
                ),
            ),
        )
        records = run_experiment(exp)
        g = find_crossover(records, "complement", "substitute")
        assert g is None or 1 <= g <= 20
        with pytest.raises(ConfigError, match="no sweep point"):
            find_crossover(records, "complement", "missing")


class TestDominanceThreshold:
    def test_requires_single_in_group_rate_axis(self):
        with pytest.raises(ConfigError, match="in_group_rate"):
            dominance_threshold(small_experiment())

    def test_requires_canonical_rates(self):
        exp = small_experiment(sweep=(axis("in_group_rate", (0.1, 0.9)),))
        with pytest.raises(ConfigError, match="must include"):
            dominance_threshold(exp)

    def test_reports_fraction_per_rate(self):
        rates = (0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99)
        exp = small_experiment(
            base=small_population(
                n=30, m=3, steps=10,
                initial_adopters=(
                    (1, StrategyId.COMPLEMENT, 0.2),
                    (2, StrategyId.SUBSTITUTE, 0.2),
                ),
            ),
            sweep=(axis("in_group_rate", rates),),
            repetitions=2,
        )
        threshold, fractions = dominance_threshold(exp)
        assert len(fractions) == 7
        assert all(0.0 <= frac <= 1.0 for _, frac in fractions)
        assert threshold is None or threshold in rates

    def test_neutral_effects_yield_no_threshold(self):
        rates = (0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99)
        exp = small_experiment(
            base=small_population(
                n=40, m=3, steps=8,
                effects=AIEffects(0.0, 0.0, 0.0, 0.0),
                allow_unordered_effects=True,
                initial_adopters=(
                    (1, StrategyId.COMPLEMENT, 0.1),
                    (2, StrategyId.SUBSTITUTE, 0.1),
                ),
            ),
            sweep=(axis("in_group_rate", rates),),
            repetitions=3,
        )
        threshold, fractions = dominance_threshold(exp)
        assert threshold is None
        assert all(frac <= 0.5 for _, frac in fractions)


class TestSkillHeatmap:
    def test_axis_validation(self):
        exp = small_experiment(sweep=(axis("effects.r_alpha_c", (0.0, 0.1, 0.2, 0.3, 0.4)),))
        with pytest.raises(ConfigError, match="r_beta_c"):
            skill_heatmap(exp)

    def test_identity_cell_matches_noai_baseline(self):
        # a homogeneous population whose strategy has zero reductions is
        # dynamically identical to a pure no-AI population under one seed
        values = (0.0, 0.1, 0.2, 0.3, 0.4)
        base = small_population(
            n=80, steps=30,
            initial_adopters=((-1, StrategyId.COMPLEMENT, 1.0),),
            allow_unordered_effects=True,
        )
        exp = small_experiment(
            base=base,
            sweep=(axis("effects.r_alpha_c", values), axis("effects.r_beta_c", values)),
            repetitions=1,
        )
        rows = skill_heatmap(exp)
        assert len(rows) == 25
        cell = next(r for r in rows if r[0] == 0.0 and r[1] == 0.0)
        baseline_cfg = PopulationConfig(
            n=80, m=1, base=base.base, effects=base.effects, delta=10.0, steps=30,
            initial_adopters=(), seed=exp.seed_at(0, 0),
        )
        baseline = run(baseline_cfg, record_groups=False)
        assert cell[2] == pytest.approx(float(baseline.population_median[-1]), abs=1e-12)

    def test_dispersion_cut_lowers_growth(self):
        # at a fixed error cut, deep dispersion cuts flip the growth rate
        # negative and the final median collapses
        values = (0.0, 0.2, 0.4, 0.8, 0.9)
        base = small_population(
            n=200, steps=150,
            initial_adopters=((-1, StrategyId.COMPLEMENT, 1.0),),
            allow_unordered_effects=True,
        )
        exp = small_experiment(
            base=base,
            sweep=(axis("effects.r_alpha_c", (0.0, 0.1, 0.2, 0.3, 0.4)),
                   axis("effects.r_beta_c", values)),
            repetitions=1,
        )
        rows = skill_heatmap(exp)
        at_zero_alpha = {r[1]: r[2] for r in rows if r[0] == 0.0}
        assert at_zero_alpha[0.0] > at_zero_alpha[0.9] + 50
