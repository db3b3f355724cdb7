# tests/test_repeated.py

import numpy as np
import pytest

from app.core.exceptions import ParameterError
from app.core.oracles import CountedObjective
from app.services.objective_service import ModularObjective, random_instance
from app.services.repeated_service import (
    choose_rg_beta,
    default_rg_ell,
    density_search_rg,
    greedy,
    modified_greedy,
    modified_repeated_greedy,
    repeated_greedy,
    sample_greedy,
    usm_double_greedy,
)
from app.services.sgs_service import density_grid_upper, fast_sgs, max_density_probes
from app.services.verify_service import brute_force_opt, sgs_extendible_bound
from tests.helpers import modular_instance

KINDS = (
    "graphcut/partition-intersection",
    "diverse-summarization/interval",
    "graphcut/hardness-M",
    "diverse-summarization/cardinality",
)


def _rounds(report):
    return [candidate.members for candidate in report.candidates if not candidate.label.endswith("'")]


class TestGreedy:
    def test_modular_with_negative_weight(self):
        report = greedy(modular_instance({0: 5, 1: 3, 2: 1, 3: -2}, limit = 2))
        assert report.solution == (0, 1)
        assert report.value == 8.0

    def test_all_negative_singletons(self):
        report = greedy(modular_instance([-1.0, -2.0]))
        assert report.solution == ()
        assert report.value == 0.0

    def test_counts_are_charged(self):
        report = greedy(modular_instance([3.0, 2.0, 1.0], limit = 2))
        assert report.value_calls >= 4
        assert report.independence_calls >= 3


class TestDoubleGreedy:
    def test_modular_trace(self):
        f = CountedObjective(ModularObjective({0: 2, 1: -1}), strict = False)
        chosen = usm_double_greedy([0, 1], f)
        assert chosen == (0,)
        assert f.value(chosen) == 2.0

    def test_monotone_keeps_everything(self):
        instance = random_instance(2, 10, "monotone-coverage/cardinality")
        assert usm_double_greedy(range(10), instance.f) == tuple(range(10))

    def test_empty(self):
        f = CountedObjective(ModularObjective([1.0]))
        assert usm_double_greedy([], f) == ()


class TestRepeatedGreedy:
    def test_default_ell(self):
        assert default_rg_ell(3, alpha = 3.0) == 2
        assert default_rg_ell(1, 1, alpha = 3.0) == 2
        assert default_rg_ell(5, monotone = True) == 1

    def test_single_round_dominates_greedy(self):
        for seed in range(20):
            instance = random_instance(seed, 11, KINDS[seed % len(KINDS)])
            assert repeated_greedy(instance.fresh(), ell = 1).value >= greedy(instance.fresh()).value

    def test_rounds_are_disjoint_and_filters_contained(self):
        for seed in range(20):
            instance = random_instance(seed, 12, KINDS[seed % len(KINDS)])
            report = repeated_greedy(instance, ell = 3)
            rounds = _rounds(report)
            seen = set()
            for members in rounds:
                assert seen.isdisjoint(members)
                seen.update(members)
            by_label = {candidate.label: candidate.members for candidate in report.candidates}
            for label, members in by_label.items():
                if label.endswith("'"):
                    assert set(members) <= set(by_label[label[:-1]])

    def test_usm_calls_are_counted(self):
        instance = random_instance(0, 10, "graphcut/cardinality")
        report = repeated_greedy(instance.fresh(), ell = 1)
        plain = greedy(instance.fresh())
        assert report.value_calls > plain.value_calls


class TestModifiedGreedy:
    def test_vacuous_gates_follow_threshold_greedy(self):
        for seed in range(20):
            instance = random_instance(seed, 12, KINDS[seed % len(KINDS)])
            assert modified_greedy(instance.fresh()).solution == fast_sgs(instance.fresh(), 1).solution

    def test_budget_rejection_trace(self):
        instance = modular_instance([6.0, 5.0], limit = 2, costs = [[0.7, 0.6]])
        report = modified_greedy(instance, rho = 8.0, eps = 0.1)
        assert report.E is True
        assert report.value == 6.0

    def test_empty_ground_set(self):
        report = modified_greedy(modular_instance([], limit = 0))
        assert report.solution == () and report.value == 0.0


class TestModifiedRepeatedGreedy:
    def test_single_round_matches_modified_greedy(self):
        for seed in range(10):
            instance = random_instance(seed, 12, "monotone-coverage/partition-intersection")
            repeated = modified_repeated_greedy(instance.fresh(), ell = 1)
            single = modified_greedy(instance.fresh())
            assert repeated.solution == single.solution
            assert repeated.value == single.value

    def test_rounds_are_disjoint(self):
        for seed in range(15):
            instance = random_instance(seed, 10, "graphcut/interval+knapsacks")
            seen = set()
            for members in _rounds(modified_repeated_greedy(instance, ell = 3, rho = 0.2)):
                assert seen.isdisjoint(members)
                seen.update(members)

    def test_flag_is_or_of_rounds(self):
        instance = modular_instance([6.0, 5.0], limit = 2, costs = [[0.7, 0.6]])
        report = modified_repeated_greedy(instance, ell = 2, rho = 8.0, eps = 0.1)
        assert report.E is True


class TestDensitySearchRg:
    def test_beta(self):
        assert choose_rg_beta(1, 2, 1, 0.1, 3.0) == pytest.approx(0.72 / 5.5)

    def test_single_iteration_rejected(self):
        with pytest.raises(ParameterError):
            choose_rg_beta(1, 1, 0, 0.1, 3.0)

    def test_call_bound(self):
        for seed in range(10):
            instance = random_instance(seed, 10, "graphcut/partition-intersection+knapsacks")
            report = density_search_rg(instance, delta = 0.25)
            k_upper = density_grid_upper(len(instance.elements), 0.25)
            assert report.stats["inner_calls"] <= max_density_probes(k_upper)
            assert report.value == pytest.approx(instance.objective.evaluate(report.solution), rel = 1e-9, abs = 1e-12)


class TestSampleGreedy:
    def test_seeded_runs_repeat(self):
        instance = random_instance(6, 12, "graphcut/partition-intersection")
        first = sample_greedy(instance.fresh(), seed = 42)
        second = sample_greedy(instance.fresh(), seed = 42)
        assert first.solution == second.solution
        assert first.stats == second.stats

    def test_full_sample_is_greedy(self):
        for seed in range(10):
            instance = random_instance(seed, 12, KINDS[seed % len(KINDS)])
            sampled = sample_greedy(instance.fresh(), seed = seed, probability = 1.0)
            assert sampled.solution == greedy(instance.fresh()).solution
            assert sampled.stats["sample_size"] == len(instance.elements)

    def test_mean_value_meets_expectation_bound(self):
        # 60 seeded draws per instance; the slack covers sampling error of the mean
        for seed in range(12):
            instance = random_instance(seed, 10, "graphcut/partition-intersection", k = 1 + seed % 2)
            k = instance.system.k
            opt = brute_force_opt(instance).opt_value
            mean = np.mean([sample_greedy(instance.fresh(), seed = run).value for run in range(60)])
            assert mean >= (sgs_extendible_bound(k) - 0.05) * opt

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_sample_rate_matches_probability(self, k):
        instance = modular_instance([1.0] * 20)
        sizes = [sample_greedy(instance.fresh(), k = k, seed = run).stats["sample_size"] for run in range(1000)]
        assert np.mean(sizes) / 20 == pytest.approx(1.0 / (k + 1), abs = 0.02)

    def test_probability_range(self):
        with pytest.raises(ParameterError):
            sample_greedy(modular_instance([1.0]), probability = 0.0)
