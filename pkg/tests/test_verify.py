# tests/test_verify.py

from typing import Sequence

import pandas as pd
import pytest

from app.constants.algorithm_constants import HARNESS_COLUMNS
from app.core.exceptions import EnumerationLimitError
from app.core.oracles import SetFunction
from app.services.constraint_service import (
    build_cardinality,
    build_hardness_M,
    build_intersection,
    build_interval_separation,
    build_partition_limit,
    build_partition_matroid,
)
from app.services.instance_service import ProblemInstance
from app.services.objective_service import ModularObjective, random_instance
from app.services.sgs_service import simultaneous_greedys
from app.services.verify_service import (
    HarnessCase,
    brute_force_opt,
    check_extendible,
    check_k_system,
    check_monotone,
    check_submodular,
    default_suites,
    harness_frame,
    knapsack_case_bound,
    monotone_bound,
    ratio_harness,
    rg_bound,
    run_suites,
    sgs_extendible_bound,
    sgs_system_bound,
    write_harness_csv,
)
from tests.helpers import modular_instance


class DecoyObjective(SetFunction):
    """Element 0 is worth 1.1 but wipes out the unit value of every other element"""

    def evaluate(self, members: Sequence[int]) -> float:
        chosen = set(members)
        return 1.1 if 0 in chosen else float(len(chosen))


def decoy_instance(seed: int) -> ProblemInstance:
    size = 3 + seed % 4
    return ProblemInstance(DecoyObjective(size + 1), build_cardinality(size + 1, size), label = f"decoy#{size}")


def matching_system():
    rows = build_partition_matroid([0, 0, 1, 1], {0: 1, 1: 1})
    columns = build_partition_matroid([0, 1, 0, 1], {0: 1, 1: 1})
    return build_intersection([rows, columns])


class TestBruteForce:
    def test_modular_cardinality(self):
        result = brute_force_opt(modular_instance([3.0, 1.0, 4.0, 1.0], limit = 2))
        assert result.opt_set == (0, 2)
        assert result.opt_value == 7.0

    def test_triangle_cut(self, triangle_cut):
        result = brute_force_opt(ProblemInstance(triangle_cut, build_cardinality(3, 2)))
        assert result.opt_value == 2.0

    def test_only_empty_feasible(self):
        result = brute_force_opt(modular_instance([1.0, 2.0], limit = 0))
        assert result.opt_set == ()
        assert result.opt_value == 0.0
        assert result.feasible_count == 1

    def test_lexicographic_tie_break(self):
        assert brute_force_opt(modular_instance([1.0, 1.0, 1.0], limit = 1)).opt_set == (0,)

    def test_respects_knapsacks(self):
        result = brute_force_opt(modular_instance([6.0, 5.0], costs = [[0.7, 0.6]]))
        assert result.opt_set == (0,)

    def test_uses_raw_oracles(self):
        instance = modular_instance([3.0, 1.0, 4.0], limit = 2)
        brute_force_opt(instance)
        assert instance.counts() == (0, 0)

    def test_size_guard(self):
        with pytest.raises(EnumerationLimitError):
            brute_force_opt(modular_instance([1.0] * 21, limit = 2))


class TestClassChecks:
    def test_cardinality_is_a_matroid(self):
        assert check_extendible(build_cardinality(5, 2), 1)
        assert check_k_system(build_cardinality(5, 2), 1)

    def test_matching_needs_two_exchanges(self):
        system = matching_system()
        assert not check_extendible(system, 1)
        assert check_extendible(system, 2)

    def test_uneven_bases(self):
        system = build_partition_limit([("a", "b"), ("a",), ("b",)], {"a": 1, "b": 1})
        assert not check_k_system(system, 1)
        assert check_k_system(system, 2)

    def test_hardness_system(self):
        assert check_k_system(build_hardness_M(2, 4, 1), 2)

    def test_interval_is_two_system(self):
        assert check_k_system(build_interval_separation([3, 1, 4, 1, 5, 9], gap = 2), 2)

    def test_size_guard(self):
        with pytest.raises(EnumerationLimitError):
            check_k_system(build_hardness_M(4, 8, 1), 4)
        with pytest.raises(EnumerationLimitError):
            check_submodular(ModularObjective([1.0] * 11))


class TestFunctionChecks:
    def test_modular_non_negative(self):
        objective = ModularObjective([1.0, 2.0, 3.0])
        assert check_submodular(objective) and check_monotone(objective)

    def test_modular_with_negative_weight(self):
        objective = ModularObjective([1.0, -2.0, 3.0], bias = 2.0)
        assert check_submodular(objective)
        assert not check_monotone(objective)

    def test_diverse_summarization(self):
        objective = random_instance(3, 7, "diverse-summarization/cardinality").objective
        assert check_submodular(objective)
        assert not check_monotone(objective)

    def test_coverage(self):
        objective = random_instance(3, 8, "monotone-coverage/cardinality").objective
        assert check_submodular(objective) and check_monotone(objective)

    def test_decoy_is_submodular_not_monotone(self):
        objective = DecoyObjective(5)
        assert check_submodular(objective)
        assert not check_monotone(objective)


class TestBounds:
    def test_formulas(self):
        assert sgs_extendible_bound(1) == pytest.approx(0.25)
        assert sgs_system_bound(2) == pytest.approx(1.0 / 9.0)
        assert monotone_bound(3) == pytest.approx(0.25)
        assert rg_bound(1, 2, 3.0) == pytest.approx(1.0 / 7.0)

    def test_knapsack_case_split(self):
        assert knapsack_case_bound(True, 10.0, 4.0, 1, 2, 1, 0.1) == 2.0
        expected = 0.9 / 2 * (0.4 * 10.0 - 1 * 4.0)
        assert knapsack_case_bound(False, 10.0, 4.0, 1, 2, 1, 0.1) == pytest.approx(expected)


class TestRatioHarness:
    def test_sound_bound_passes(self):
        suite = default_suites(max_n = 8)[0]
        rows = ratio_harness(suite.cases, suite.generator, 10, 1, suite.name)
        assert len(rows) == 10
        assert all(row.passed for row in rows)
        assert all(row.algorithm.startswith("sgs-extendible:") for row in rows)

    def test_seeded_rows_repeat(self):
        suite = default_suites(max_n = 8)[4]
        first = ratio_harness(suite.cases, suite.generator, 4, 9)
        second = ratio_harness(suite.cases, suite.generator, 4, 9)
        assert [row.model_dump() for row in first] == [row.model_dump() for row in second]

    def test_wrong_bound_is_caught(self):
        single = HarnessCase(
            "simultaneous_greedys-1",
            lambda instance: simultaneous_greedys(instance, 1),
            lambda instance, report, opt: opt / (instance.system.k + 1),
        )
        rows = ratio_harness([single], decoy_instance, 8, 3)
        assert any(not row.passed for row in rows)

    def test_decoy_meets_the_true_bound(self):
        paired = HarnessCase(
            "simultaneous_greedys-2",
            lambda instance: simultaneous_greedys(instance, 2),
            lambda instance, report, opt: sgs_extendible_bound(1) * opt,
        )
        assert all(row.passed for row in ratio_harness([paired], decoy_instance, 8, 3))

    def test_csv_columns(self, tmp_path):
        suite = default_suites(max_n = 7)[2]
        rows = ratio_harness(suite.cases, suite.generator, 2, 5, suite.name)
        path = tmp_path / "harness.csv"
        write_harness_csv(rows, str(path))
        frame = pd.read_csv(path)
        assert list(frame.columns) == HARNESS_COLUMNS
        assert len(frame) == len(rows) == len(harness_frame(rows))

    def test_run_suites(self):
        rows = run_suites(trials = 2, seed = 4, suites = default_suites(max_n = 7)[:2])
        assert len(rows) == 4
        assert all(row.passed for row in rows)
