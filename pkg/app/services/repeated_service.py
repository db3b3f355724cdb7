# app/services/repeated_service.py

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import ParameterError
from app.core.oracles import CountedObjective, ElementSet
from app.models.models import Candidate, RgParams, RunReport
from app.services.greedy_engine import check_ell, check_epsilon, lazy_pair_search, threshold_sweep
from app.services.instance_service import ProblemInstance, best_candidate, finish_report
from app.services.sgs_service import expansion_steps, run_density_search


class ModifiedRound(NamedTuple):
    best: Candidate
    E: bool
    path: List[Tuple[int, int]]
    rounds: int


def default_rg_ell(k: int, m: int = 0, alpha: Optional[float] = None, monotone: bool = False) -> int:
    """ℓ = ⌊1 + √(2(k + 2m + 1)/α)⌋, or 1 for monotone objectives"""
    alpha = settings.usm_alpha if alpha is None else alpha
    if monotone:
        return 1
    return math.floor(1 + math.sqrt(2 * (k + 2 * m + 1) / alpha))


def choose_rg_beta(
    k: int,
    ell: int,
    m: int,
    eps: float,
    alpha: Optional[float] = None,
    monotone: bool = False,
) -> float:
    check_epsilon(eps)
    if not monotone and ell < 2:
        raise ParameterError("Non-monotone density search needs ℓ >= 2")
    params = RgParams(ell = ell, alpha = settings.usm_alpha if alpha is None else alpha, eps = eps, k = k, m = m, monotone = monotone)
    numerator = (1.0 - eps) if monotone else (1.0 - 1.0 / ell - eps)
    return 2.0 * (1.0 - eps) * numerator / params.denominator


def greedy(instance: ProblemInstance, elements: Optional[Sequence[int]] = None, algorithm: str = "greedy") -> RunReport:
    """Classic lazy greedy that stops at the first non-positive gain"""
    start = instance.counts()
    result = lazy_pair_search(instance, 1, instance.elements if elements is None else elements)
    return finish_report(algorithm, instance, start, [result.solutions[0].candidate("S")], path = result.path)


def _double_greedy(A: Sequence[int], f: CountedObjective) -> Tuple[ElementSet, float]:
    X: List[int] = []
    Y = list(ElementSet(A))
    value_x = f.value(X)
    value_y = f.value(Y)
    for u in ElementSet(A):
        grown = X + [u]
        shrunk = [v for v in Y if v != u]
        value_grown = f.value(grown)
        value_shrunk = f.value(shrunk)
        if value_grown - value_x >= value_shrunk - value_y:
            X, value_x = grown, value_grown
        else:
            Y, value_y = shrunk, value_shrunk
    return ElementSet(X), value_x


def usm_double_greedy(A: Sequence[int], f: CountedObjective) -> ElementSet:
    """Deterministic double greedy over A in ascending id; ties add"""
    return _double_greedy(A, f)[0]


def repeated_greedy(
    instance: ProblemInstance,
    ell: Optional[int] = None,
    alpha: Optional[float] = None,
    monotone: bool = False,
) -> RunReport:
    ell = check_ell(default_rg_ell(instance.system.k, 0, alpha, monotone) if ell is None else ell)
    start = instance.counts()
    remaining = list(instance.elements)
    candidates: List[Candidate] = []
    path: List[Tuple[int, int]] = []

    for i in range(ell):
        result = lazy_pair_search(instance, 1, remaining)
        solution = result.solutions[0]
        candidates.append(solution.candidate(f"S{i + 1}"))
        filtered, filtered_value = _double_greedy(solution.members, instance.f)
        candidates.append(Candidate(label = f"S{i + 1}'", members = filtered, value = filtered_value))
        path.extend((u, i) for u, _ in result.path)
        if not solution.members:
            break
        taken = set(solution.members)
        remaining = [u for u in remaining if u not in taken]

    return finish_report(
        "repeated_greedy",
        instance,
        start,
        candidates,
        params = {"ell": ell, "alpha": settings.usm_alpha if alpha is None else alpha},
        path = path,
    )


def _modified_round(instance: ProblemInstance, elements: Sequence[int], rho: float, eps: float, index: int = 0) -> ModifiedRound:
    sweep = threshold_sweep(instance, 1, eps, elements, rho = rho, use_knapsacks = True)
    candidates = [sweep.solutions[0].candidate("S")]
    if sweep.best_singleton is not None:
        candidates.append(
            Candidate(label = f"singleton{sweep.best_singleton}", members = (sweep.best_singleton,), value = sweep.delta_f)
        )
    path = [(u, index) for u, _ in sweep.path]
    return ModifiedRound(best_candidate(candidates), sweep.E, path, sweep.rounds)


def modified_greedy(instance: ProblemInstance, rho: float = 0.0, eps: Optional[float] = None) -> RunReport:
    """Single-solution knapsack threshold greedy; returns the better of S and {u*}"""
    eps = settings.default_epsilon if eps is None else eps
    start = instance.counts()
    outcome = _modified_round(instance, instance.elements, rho, eps)
    return finish_report(
        "modified_greedy",
        instance,
        start,
        [outcome.best],
        params = {"eps": eps, "rho": rho},
        E = outcome.E,
        path = outcome.path,
        stats = {"threshold_rounds": outcome.rounds},
    )


def modified_repeated_greedy(
    instance: ProblemInstance,
    ell: Optional[int] = None,
    rho: float = 0.0,
    eps: Optional[float] = None,
    alpha: Optional[float] = None,
    monotone: bool = False,
) -> RunReport:
    eps = settings.default_epsilon if eps is None else eps
    ell = check_ell(default_rg_ell(instance.system.k, instance.m, alpha, monotone) if ell is None else ell)
    start = instance.counts()
    remaining = list(instance.elements)
    candidates: List[Candidate] = []
    path: List[Tuple[int, int]] = []
    E = False

    for i in range(ell):
        outcome = _modified_round(instance, remaining, rho, eps, i)
        E = E or outcome.E
        chosen = outcome.best
        candidates.append(chosen.model_copy(update = {"label": f"S{i + 1}"}))
        filtered, filtered_value = _double_greedy(chosen.members, instance.f)
        candidates.append(Candidate(label = f"S{i + 1}'", members = filtered, value = filtered_value))
        path.extend(outcome.path)
        if not chosen.members:
            break
        taken = set(chosen.members)
        remaining = [u for u in remaining if u not in taken]

    return finish_report(
        "modified_repeated_greedy",
        instance,
        start,
        candidates,
        params = {"ell": ell, "eps": eps, "rho": rho, "alpha": settings.usm_alpha if alpha is None else alpha},
        E = E,
        path = path,
    )


def density_search_rg(
    instance: ProblemInstance,
    ell: Optional[int] = None,
    delta: Optional[float] = None,
    eps: Optional[float] = None,
    beta: Optional[float] = None,
    alpha: Optional[float] = None,
    monotone: bool = False,
    expand_range: bool = False,
) -> RunReport:
    eps = check_epsilon(settings.default_epsilon if eps is None else eps)
    delta = settings.default_delta if delta is None else delta
    alpha = settings.usm_alpha if alpha is None else alpha
    k, m = instance.system.k, instance.m
    ell = check_ell(default_rg_ell(k, m, alpha, monotone) if ell is None else ell)

    extra_steps = 0
    if expand_range:
        beta_low = choose_rg_beta(k, ell, m, eps, alpha, monotone = False)
        beta_high = choose_rg_beta(k, ell, m, eps, alpha, monotone = True)
        extra_steps = expansion_steps(beta_low, beta_high, delta)
        beta = beta_low if beta is None else beta
    elif beta is None:
        beta = choose_rg_beta(k, ell, m, eps, alpha, monotone)

    return run_density_search(
        "density_search_rg",
        instance,
        lambda rho: modified_repeated_greedy(instance, ell, rho, eps, alpha, monotone),
        beta,
        delta,
        extra_steps,
        params = {"ell": ell, "eps": eps, "alpha": alpha, "monotone": monotone, "expand_range": expand_range},
    )


def sample_greedy(
    instance: ProblemInstance,
    k: Optional[int] = None,
    seed: int = 0,
    probability: Optional[float] = None,
) -> RunReport:
    """Greedy on a Bernoulli(1/(k+1)) subsample drawn from a seeded PCG64 stream"""
    k = instance.system.k if k is None else k
    if k < 1:
        raise ParameterError(f"k must be at least 1, got {k}")
    probability = 1.0 / (k + 1) if probability is None else probability
    if not 0.0 < probability <= 1.0:
        raise ParameterError(f"Sampling probability must lie in (0, 1], got {probability}")

    rng = np.random.default_rng(seed)
    elements = list(instance.elements)
    keep = rng.random(len(elements)) < probability
    sample = [u for u, kept in zip(elements, keep) if kept]

    report = greedy(instance, sample, algorithm = "sample_greedy")
    report.params = {"k": k, "seed": seed, "probability": probability}
    report.stats = {"sample_size": len(sample)}
    return report
