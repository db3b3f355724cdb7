# app/services/verify_service.py

import math
from itertools import combinations
from typing import Callable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from app.constants.algorithm_constants import (
    BRUTE_FORCE_MAX_N,
    CLASS_CHECK_MAX_N,
    HARNESS_COLUMNS,
    K_EXTENDIBLE,
    K_SYSTEM,
    VALUE_TOLERANCE,
)
from app.core.config import settings
from app.core.exceptions import EnumerationLimitError
from app.core.oracles import ElementSet, IndependenceSystem, SetFunction
from app.models.models import BruteForceResult, HarnessRow, RunReport, SgsParams
from app.services.instance_service import ProblemInstance
from app.services.objective_service import random_instance
from app.services.repeated_service import (
    density_search_rg,
    greedy,
    modified_repeated_greedy,
    repeated_greedy,
)
from app.services.sgs_service import choose_ell, density_search_sgs, knapsack_sgs, simultaneous_greedys
from app.utils.logger_service import logger

InstanceGenerator = Callable[[int], ProblemInstance]
BoundRule = Callable[[ProblemInstance, RunReport, float], float]


def brute_force_opt(instance: ProblemInstance) -> BruteForceResult:
    """Exhaustive optimum over sets feasible for I and every knapsack

    Sets are visited depth-first in lexicographic order and pruned at the
    first infeasible prefix, so the first maximizer met is the
    lexicographically smallest. Only raw oracles are queried.
    """
    if instance.n > BRUTE_FORCE_MAX_N:
        raise EnumerationLimitError("brute_force_opt", instance.n, BRUTE_FORCE_MAX_N)

    objective, system, knapsacks = instance.objective, instance.system, instance.knapsacks
    elements = list(instance.elements)
    best_set, best_value = ElementSet(), float(objective.evaluate(()))
    feasible_count = 1

    def visit(members: Tuple[int, ...], start: int) -> None:
        nonlocal best_set, best_value, feasible_count
        for index in range(start, len(elements)):
            candidate = (*members, elements[index])
            if not system.is_independent(candidate):
                continue
            if knapsacks is not None and not knapsacks.is_feasible(candidate):
                continue
            feasible_count += 1
            value = float(objective.evaluate(candidate))
            if value > best_value:
                best_set, best_value = ElementSet(candidate), value
            visit(candidate, index + 1)

    visit((), 0)
    return BruteForceResult(opt_set = best_set, opt_value = best_value, feasible_count = feasible_count)


def _guard_class_check(operation: str, n: int) -> None:
    if n > CLASS_CHECK_MAX_N:
        raise EnumerationLimitError(operation, n, CLASS_CHECK_MAX_N)


def _bits(mask: int) -> Tuple[int, ...]:
    return tuple(u for u in range(mask.bit_length()) if mask >> u & 1)


def _submasks(mask: int) -> Iterator[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _feasible_masks(system: IndependenceSystem) -> Set[int]:
    return {mask for mask in range(1 << system.n) if system.is_independent(_bits(mask))}


def check_extendible(system: IndependenceSystem, k: Optional[int] = None) -> bool:
    """For feasible A ⊆ B and u ∉ B with A + u feasible, some Y ⊆ B \\ A of
    size <= k leaves (B \\ Y) + u feasible"""
    _guard_class_check("check_extendible", system.n)
    k = system.k if k is None else k
    feasible = _feasible_masks(system)

    for B in feasible:
        for A in _submasks(B):
            if A not in feasible:
                continue
            spare = _bits(B & ~A)
            for u in range(system.n):
                bit = 1 << u
                if B & bit or (A | bit) not in feasible or (B | bit) in feasible:
                    continue
                repaired = any(
                    ((B & ~sum(1 << y for y in removed)) | bit) in feasible
                    for size in range(1, min(k, len(spare)) + 1)
                    for removed in combinations(spare, size)
                )
                if not repaired:
                    logger.debug(f"🔍 Exchange fails: A={_bits(A)} B={_bits(B)} u={u} k={k}")
                    return False
    return True


def check_k_system(system: IndependenceSystem, k: Optional[int] = None) -> bool:
    """Within every subset, the largest base is at most k times the smallest"""
    _guard_class_check("check_k_system", system.n)
    k = system.k if k is None else k
    feasible = _feasible_masks(system)

    for B in range(1 << system.n):
        sizes = []
        for S in _submasks(B):
            if S not in feasible:
                continue
            if all((S | 1 << u) not in feasible for u in _bits(B & ~S)):
                sizes.append(bin(S).count("1"))
        if sizes and min(sizes) > 0 and max(sizes) > k * min(sizes):
            logger.debug(f"🔍 Base sizes {min(sizes)}..{max(sizes)} inside {_bits(B)} exceed k={k}")
            return False
    return True


def _all_values(f: SetFunction) -> List[float]:
    _guard_class_check("set function check", f.n)
    return [float(f.evaluate(_bits(mask))) for mask in range(1 << f.n)]


def _tolerance(values: Sequence[float]) -> float:
    return VALUE_TOLERANCE * max(1.0, max(abs(value) for value in values))


def check_submodular(f: SetFunction) -> bool:
    values = _all_values(f)
    tol = _tolerance(values)
    for A in range(1 << f.n):
        outside = [u for u in range(f.n) if not A >> u & 1]
        for u, v in combinations(outside, 2):
            bu, bv = 1 << u, 1 << v
            if values[A | bu] + values[A | bv] < values[A | bu | bv] + values[A] - tol:
                return False
    return True


def check_monotone(f: SetFunction) -> bool:
    values = _all_values(f)
    tol = _tolerance(values)
    return all(
        values[A | 1 << u] >= values[A] - tol
        for A in range(1 << f.n)
        for u in range(f.n)
        if not A >> u & 1
    )


# Guarantee formulas, as fractions of OPT or absolute lower bounds


def sgs_extendible_bound(k: int) -> float:
    return k / (k + 1) ** 2


def sgs_system_bound(k: int) -> float:
    return 1.0 / (1.0 + math.sqrt(k + 2)) ** 2


def monotone_bound(k: int) -> float:
    return 1.0 / (k + 1)


def rg_bound(k: int, ell: int, alpha: float) -> float:
    return (1.0 - 1.0 / ell) / (k + 1 + alpha * (ell - 1) / 2)


def knapsack_case_bound(
    E: bool,
    opt: float,
    rho: float,
    p: int,
    ell: int,
    m: int,
    eps: float,
    monotone: bool = False,
) -> float:
    if E:
        return rho / 2
    share = (1.0 - eps) if monotone else (1.0 - 1.0 / ell - eps)
    return (1.0 - eps) / (p + 1) * (share * opt - m * rho)


def density_sgs_bound(opt: float, p: int, ell: int, m: int, eps: float, delta: float, monotone: bool = False) -> float:
    share = 1.0 if monotone else 1.0 - 1.0 / ell
    return (1.0 - delta) * (1.0 - 2 * eps) ** 2 * share / (p + 1 + 2 * m) * opt


def modified_rg_case_bound(
    E: bool,
    opt: float,
    rho: float,
    k: int,
    ell: int,
    m: int,
    eps: float,
    alpha: float,
) -> float:
    if E:
        return rho / 2
    return (1.0 - eps) / (k + 1 + alpha * (ell - 1) / 2) * ((1.0 - 1.0 / ell - eps) * opt - rho * m)


def density_rg_bound(opt: float, k: int, ell: int, m: int, eps: float, delta: float, alpha: float) -> float:
    share = 1.0 - 1.0 / ell
    return (1.0 - delta) * (1.0 - 2 * eps) ** 2 * share / (k + 2 * m + 1 + alpha * (ell - 1) / 2) * opt


# Ratio harness


class HarnessCase(NamedTuple):
    name: str
    run: Callable[[ProblemInstance], RunReport]
    bound: BoundRule


class HarnessSuite(NamedTuple):
    name: str
    generator: InstanceGenerator
    cases: List[HarnessCase]


def ratio_harness(
    cases: Sequence[HarnessCase],
    generator: InstanceGenerator,
    trials: int,
    seed: int,
    suite: str = "",
) -> List[HarnessRow]:
    """Run every case on `trials` seeded instances against brute-force OPT"""
    rng = np.random.default_rng(seed)
    rows: List[HarnessRow] = []
    for trial_seed in rng.integers(0, 2 ** 31, size = trials):
        instance = generator(int(trial_seed))
        opt = brute_force_opt(instance).opt_value
        for case in cases:
            report = case.run(instance.fresh())
            bound = case.bound(instance, report, opt)
            passed = report.value >= bound - VALUE_TOLERANCE
            name = f"{suite}:{case.name}" if suite else case.name
            rows.append(
                HarnessRow(
                    instance = instance.label,
                    algorithm = name,
                    value = report.value,
                    opt = opt,
                    ratio = report.value / opt if opt > 0 else 1.0,
                    calls = report.calls,
                    bound = bound,
                    passed = passed,
                )
            )
            if not passed:
                logger.warning(f"⚠️ {name} on {instance.label}: value {report.value:.6g} < bound {bound:.6g}")
    return rows


def harness_frame(rows: Sequence[HarnessRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump(by_alias = True) for row in rows], columns = HARNESS_COLUMNS)


def write_harness_csv(rows: Sequence[HarnessRow], path: str) -> None:
    harness_frame(rows).to_csv(path, index = False)
    logger.info(f"📊 Harness table written to {path} ({len(rows)} rows)")


def _exchange_bound(instance: ProblemInstance, ell: int) -> int:
    system = instance.system
    return SgsParams(ell = ell, system_class = system.system_class, k = system.k).p


def _singleton_peak(instance: ProblemInstance) -> float:
    return max((instance.objective.evaluate((u,)) for u in instance.elements), default = 0.0)


def pool_generator(
    objectives: Sequence[str],
    constraints: Sequence[str],
    max_n: int,
    knapsacks: bool = False,
    system_class: str = K_EXTENDIBLE,
) -> InstanceGenerator:
    """Seeded random instances drawn from the given kind grid"""

    def generate(seed: int) -> ProblemInstance:
        rng = np.random.default_rng(seed)
        objective_kind = objectives[int(rng.integers(len(objectives)))]
        constraint_kind = constraints[int(rng.integers(len(constraints)))]
        n = int(rng.integers(min(6, max_n), max_n + 1))
        k = None
        if constraint_kind == "partition-intersection":
            k = int(rng.integers(1, 4))
        elif constraint_kind == "hardness-M":
            k = int(rng.integers(1, 3)) if n >= 8 else 1
        kind = f"{objective_kind}/{constraint_kind}" + ("+knapsacks" if knapsacks else "")
        instance = random_instance(seed, n, kind, k = k)
        if system_class == K_SYSTEM:
            declared = instance.system.declared(K_SYSTEM, instance.system.k)
            instance = ProblemInstance(
                instance.objective, declared, instance.knapsacks, instance.label, elements = instance.elements
            )
        return instance

    return generate


def _sgs_case(bound_ratio: Callable[[int], float], monotone: bool = False) -> HarnessCase:
    def run(instance: ProblemInstance) -> RunReport:
        system = instance.system
        return simultaneous_greedys(instance, choose_ell(system.system_class, system.k, 0, monotone))

    return HarnessCase(
        "simultaneous_greedys" + ("-monotone" if monotone else ""),
        run,
        lambda instance, report, opt: bound_ratio(instance.system.k) * opt,
    )


def _knapsack_sgs_case(rho_share: float) -> HarnessCase:
    def run(instance: ProblemInstance) -> RunReport:
        system = instance.system
        ell = choose_ell(system.system_class, system.k, instance.m)
        return knapsack_sgs(instance, ell, rho_share * _singleton_peak(instance))

    def bound(instance: ProblemInstance, report: RunReport, opt: float) -> float:
        ell, eps, rho = report.params["ell"], report.params["eps"], report.params["rho"]
        return knapsack_case_bound(bool(report.E), opt, rho, _exchange_bound(instance, ell), ell, instance.m, eps)

    return HarnessCase(f"knapsack_sgs-rho{rho_share:g}", run, bound)


def _modified_rg_case(rho_share: float) -> HarnessCase:
    def run(instance: ProblemInstance) -> RunReport:
        return modified_repeated_greedy(instance, rho = rho_share * _singleton_peak(instance))

    def bound(instance: ProblemInstance, report: RunReport, opt: float) -> float:
        params = report.params
        return modified_rg_case_bound(
            bool(report.E), opt, params["rho"], instance.system.k, params["ell"], instance.m, params["eps"], params["alpha"]
        )

    return HarnessCase(f"modified_repeated_greedy-rho{rho_share:g}", run, bound)


def _density_sgs_bound_rule(instance: ProblemInstance, report: RunReport, opt: float) -> float:
    params = report.params
    ell = params["ell"]
    return density_sgs_bound(opt, _exchange_bound(instance, ell), ell, instance.m, params["eps"], params["delta"])


def _density_rg_bound_rule(instance: ProblemInstance, report: RunReport, opt: float) -> float:
    params = report.params
    return density_rg_bound(
        opt, instance.system.k, params["ell"], instance.m, params["eps"], params["delta"], params["alpha"]
    )


def _rg_bound_rule(instance: ProblemInstance, report: RunReport, opt: float) -> float:
    params = report.params
    return rg_bound(instance.system.k, params["ell"], params["alpha"]) * opt


ALL_OBJECTIVES = ("monotone-coverage", "graphcut", "diverse-summarization")


def default_suites(max_n: Optional[int] = None) -> List[HarnessSuite]:
    """Guarantee suites run by `verify`, one per algorithm family"""
    max_n = settings.harness_max_n if max_n is None else max_n
    knapsack_n = min(max_n, 10)
    monotone_rule = lambda instance, report, opt: monotone_bound(instance.system.k) * opt  # noqa: E731

    return [
        HarnessSuite(
            "sgs-extendible",
            pool_generator(ALL_OBJECTIVES, ("partition-intersection",), max_n),
            [_sgs_case(sgs_extendible_bound)],
        ),
        HarnessSuite(
            "sgs-system",
            pool_generator(ALL_OBJECTIVES, ("hardness-M", "interval", "partition-intersection"), max_n, system_class = K_SYSTEM),
            [_sgs_case(sgs_system_bound)],
        ),
        HarnessSuite(
            "monotone",
            pool_generator(("monotone-coverage",), ("partition-intersection", "interval", "cardinality"), max_n),
            [
                _sgs_case(monotone_bound, monotone = True),
                HarnessCase("greedy", greedy, monotone_rule),
                HarnessCase("repeated_greedy-monotone", lambda instance: repeated_greedy(instance, monotone = True), monotone_rule),
            ],
        ),
        HarnessSuite(
            "monotone-system",
            pool_generator(("monotone-coverage",), ("hardness-M", "interval"), max_n, system_class = K_SYSTEM),
            [_sgs_case(monotone_bound, monotone = True)],
        ),
        HarnessSuite(
            "repeated-greedy",
            pool_generator(ALL_OBJECTIVES, ("partition-intersection", "interval", "hardness-M", "cardinality"), max_n),
            [HarnessCase("repeated_greedy", repeated_greedy, _rg_bound_rule)],
        ),
        HarnessSuite(
            "knapsack",
            pool_generator(ALL_OBJECTIVES, ("partition-intersection", "interval", "cardinality"), knapsack_n, knapsacks = True),
            [
                _knapsack_sgs_case(0.5),
                _knapsack_sgs_case(1.0),
                _knapsack_sgs_case(2.0),
                HarnessCase("density_search_sgs", density_search_sgs, _density_sgs_bound_rule),
                _modified_rg_case(0.5),
                _modified_rg_case(2.0),
                HarnessCase("density_search_rg", density_search_rg, _density_rg_bound_rule),
            ],
        ),
    ]


def run_suites(
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    suites: Optional[Sequence[HarnessSuite]] = None,
) -> List[HarnessRow]:
    trials = settings.harness_trials if trials is None else trials
    seed = settings.harness_seed if seed is None else seed
    rows: List[HarnessRow] = []
    for suite in default_suites() if suites is None else suites:
        logger.info(f"🔍 Running suite {suite.name} ({trials} trials, seed {seed})")
        suite_rows = ratio_harness(suite.cases, suite.generator, trials, seed, suite.name)
        failures = sum(1 for row in suite_rows if not row.passed)
        logger.info(f"{'✅' if failures == 0 else '❌'} {suite.name}: {len(suite_rows) - failures}/{len(suite_rows)} rows pass")
        rows.extend(suite_rows)
    return rows
