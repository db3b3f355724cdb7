# app/services/sgs_service.py

import math
from typing import Any, Callable, Dict, List, Optional

from app.constants.algorithm_constants import K_SYSTEM
from app.core.config import settings
from app.core.exceptions import ParameterError
from app.core.oracles import max_singleton
from app.models.models import Candidate, RunReport, SgsParams
from app.services.greedy_engine import (
    check_ell,
    check_epsilon,
    eager_pair_search,
    lazy_pair_search,
    threshold_sweep,
)
from app.services.instance_service import ProblemInstance, finish_report
from app.utils.logger_service import logger


def choose_ell(system_class: str, k: int, m: int = 0, monotone: bool = False) -> int:
    """Number of simultaneous solutions prescribed by the guarantees"""
    if k < 1 or m < 0:
        raise ParameterError(f"Need k >= 1 and m >= 0, got k={k}, m={m}")
    if monotone:
        return 1 if system_class == K_SYSTEM else k + 1
    if system_class == K_SYSTEM:
        return math.floor(2 + math.sqrt(k + 2 * m + 2))
    if m == 0:
        return k + 1
    return max(math.ceil(math.sqrt(1 + 2 * m)), k) + 1


def choose_beta(
    system_class: str,
    k: int,
    ell: int,
    m: int,
    eps: float,
    monotone: bool = False,
) -> float:
    """Scale of the density grid: ρ_i = β Δ_f (1 + δ)^i"""
    check_epsilon(eps)
    if not monotone and ell < 2:
        raise ParameterError("Non-monotone density search needs ℓ >= 2")
    params = SgsParams(ell = ell, eps = eps, monotone = monotone, system_class = system_class, k = k, m = m)
    numerator = (1.0 - eps) if monotone else (1.0 - 1.0 / ell - eps)
    return 2.0 * (1.0 - eps) * numerator / (params.p + 1 + 2 * m)


def density_grid_upper(n: int, delta: float) -> int:
    """k_u = ⌈(1/δ) ln n⌉"""
    if not 0.0 < delta < 0.5:
        raise ParameterError(f"δ must lie in (0, 1/2), got {delta}")
    return math.ceil(math.log(n) / delta) if n > 1 else 0


def max_density_probes(k_upper: int) -> int:
    """Ceiling on inner calls made by the bisection from (1, k_upper)"""
    if k_upper <= 2:
        return 1
    return math.ceil(math.log2(k_upper - 1)) + 1


def density_grid_search(k_upper: int, probe: Callable[[int], bool]) -> List[int]:
    """Bisect the grid indices [1, k_upper]; returns the probed indices in order

    `probe(i)` runs the inner algorithm at index i and reports its E flag.
    E = 0 raises the lower end, E = 1 lowers the upper end. The last probe
    is at the final lower end.
    """
    k_lower = 1
    visited = []
    while abs(k_upper - k_lower) > 1:
        k_mid = math.ceil((k_lower + k_upper) / 2)
        visited.append(k_mid)
        if probe(k_mid):
            k_upper = k_mid
        else:
            k_lower = k_mid
    visited.append(k_lower)
    probe(k_lower)
    return visited


def simultaneous_greedys(instance: ProblemInstance, ell: int, lazy: bool = True) -> RunReport:
    start = instance.counts()
    search = lazy_pair_search if lazy else eager_pair_search
    result = search(instance, ell, instance.elements)
    candidates = [solution.candidate(f"S{j + 1}") for j, solution in enumerate(result.solutions)]
    return finish_report(
        "simultaneous_greedys",
        instance,
        start,
        candidates,
        params = {"ell": ell, "lazy": lazy},
        path = result.path,
    )


def fast_sgs(instance: ProblemInstance, ell: int, eps: Optional[float] = None) -> RunReport:
    eps = settings.default_epsilon if eps is None else eps
    start = instance.counts()
    sweep = threshold_sweep(instance, ell, eps, instance.elements)
    candidates = [solution.candidate(f"S{j + 1}") for j, solution in enumerate(sweep.solutions)]
    return finish_report(
        "fast_sgs",
        instance,
        start,
        candidates,
        params = {"ell": ell, "eps": eps},
        path = sweep.path,
        stats = {"threshold_rounds": sweep.rounds},
    )


def knapsack_sgs(
    instance: ProblemInstance,
    ell: int,
    rho: float = 0.0,
    eps: Optional[float] = None,
) -> RunReport:
    """Threshold sweep with the density and knapsack gates

    The final argmax also ranges over the best singleton, which covers the
    case where a budget rejection stopped a valuable solution.
    """
    eps = settings.default_epsilon if eps is None else eps
    start = instance.counts()
    sweep = threshold_sweep(instance, ell, eps, instance.elements, rho = rho, use_knapsacks = True)
    candidates = [solution.candidate(f"S{j + 1}") for j, solution in enumerate(sweep.solutions)]
    if sweep.best_singleton is not None:
        candidates.append(
            Candidate(label = f"singleton{sweep.best_singleton}", members = (sweep.best_singleton,), value = sweep.delta_f)
        )
    return finish_report(
        "knapsack_sgs",
        instance,
        start,
        candidates,
        params = {"ell": ell, "eps": eps, "rho": rho},
        E = sweep.E,
        path = sweep.path,
        stats = {"threshold_rounds": sweep.rounds},
    )


def run_density_search(
    algorithm: str,
    instance: ProblemInstance,
    inner: Callable[[float], RunReport],
    beta: float,
    delta: float,
    extra_steps: int = 0,
    params: Optional[Dict[str, Any]] = None,
) -> RunReport:
    """Bisection over ρ = β Δ_f (1 + δ)^i driven by the inner E flags"""
    start = instance.counts()
    if beta <= 0:
        raise ParameterError(f"β must be positive, got {beta}")
    n = len(instance.elements)
    delta_f = max_singleton(instance.f, instance.elements)[0] if n else 0.0
    k_upper = density_grid_upper(max(n, 1), delta) + extra_steps

    reports: List[RunReport] = []
    probes: List[Dict[str, Any]] = []

    def probe(index: int) -> bool:
        rho = beta * delta_f * (1.0 + delta) ** index
        report = inner(rho)
        reports.append(report)
        probes.append({"k": index, "rho": rho, "E": bool(report.E), "value": report.value})
        logger.debug(f"🔍 {algorithm} probe k={index} ρ={rho:.6g} E={bool(report.E)} value={report.value:.6g}")
        return bool(report.E)

    visited = density_grid_search(k_upper, probe)
    candidates = [
        Candidate(label = f"k{index}:{report.algorithm}", members = report.solution, value = report.value)
        for index, report in zip(visited, reports)
    ]
    return finish_report(
        algorithm,
        instance,
        start,
        candidates,
        params = {**(params or {}), "beta": beta, "delta": delta},
        E = any(bool(report.E) for report in reports),
        stats = {"k_upper": k_upper, "probes": probes, "inner_calls": len(probes)},
    )


def expansion_steps(beta_low: float, beta_high: float, delta: float) -> int:
    """Extra grid steps that stretch the search from β_low up to β_high"""
    if beta_high <= beta_low:
        return 0
    return math.ceil(math.log(beta_high / beta_low) / math.log(1.0 + delta))


def density_search_sgs(
    instance: ProblemInstance,
    ell: Optional[int] = None,
    delta: Optional[float] = None,
    eps: Optional[float] = None,
    beta: Optional[float] = None,
    monotone: bool = False,
    expand_range: bool = False,
) -> RunReport:
    eps = check_epsilon(settings.default_epsilon if eps is None else eps)
    delta = settings.default_delta if delta is None else delta
    system_class, k, m = instance.system.system_class, instance.system.k, instance.m
    ell = check_ell(choose_ell(system_class, k, m, monotone) if ell is None else ell)

    extra_steps = 0
    if expand_range:
        beta_low = choose_beta(system_class, k, ell, m, eps, monotone = False)
        beta_high = choose_beta(system_class, k, ell, m, eps, monotone = True)
        extra_steps = expansion_steps(beta_low, beta_high, delta)
        beta = beta_low if beta is None else beta
    elif beta is None:
        beta = choose_beta(system_class, k, ell, m, eps, monotone)

    return run_density_search(
        "density_search_sgs",
        instance,
        lambda rho: knapsack_sgs(instance, ell, rho, eps),
        beta,
        delta,
        extra_steps,
        params = {"ell": ell, "eps": eps, "monotone": monotone, "expand_range": expand_range},
    )
