# app/services/greedy_engine.py

import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

from app.constants.algorithm_constants import VALUE_TOLERANCE
from app.core.config import settings
from app.core.exceptions import ParameterError, ThresholdAuditError
from app.core.oracles import max_singleton
from app.services.instance_service import ProblemInstance, Solution
from app.utils.pair_queue import PairQueue

Pair = Tuple[int, int]


class PairSearchResult(NamedTuple):
    solutions: List[Solution]
    path: List[Pair]


class SweepResult(NamedTuple):
    solutions: List[Solution]
    path: List[Pair]
    rounds: int
    E: bool
    delta_f: float
    best_singleton: Optional[int]


def check_epsilon(eps: float) -> float:
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"ε must lie in (0, 1/2), got {eps}")
    return eps


def check_ell(ell: int) -> int:
    if ell < 1:
        raise ParameterError(f"Number of solutions must be at least 1, got {ell}")
    return ell


def threshold_rounds(n: int, eps: float) -> int:
    """Smallest a with (1 - ε)^a <= ε/n, by iterating the threshold decay"""
    check_epsilon(eps)
    rounds, tau = 0, 1.0
    while tau > eps / n:
        rounds += 1
        tau *= 1.0 - eps
    return rounds


def _open_solutions(instance: ProblemInstance, ell: int) -> List[Solution]:
    empty_value = instance.f.value(())
    return [Solution(instance, empty_value) for _ in range(ell)]


def lazy_pair_search(instance: ProblemInstance, ell: int, elements: Sequence[int]) -> PairSearchResult:
    """Repeatedly add the feasible pair of largest positive gain, lazily

    A popped entry is accepted only if its gain was computed against the
    current state of its solution; otherwise the pair is refreshed and pushed
    back. Infeasible pairs and pairs with gain <= 0 are dropped for good.
    """
    check_ell(ell)
    solutions = _open_solutions(instance, ell)
    queue = PairQueue()

    # every solution starts empty, so one probe serves all ℓ of them
    probe = solutions[0]
    for u in elements:
        if not probe.can_add(u):
            continue
        new_value = probe.value_with(u)
        gain = new_value - probe.value
        if gain > 0:
            for j in range(ell):
                queue.push(gain, u, j, 0, new_value)

    used: Set[int] = set()
    path: List[Pair] = []
    while queue:
        gain, u, j, version, new_value = queue.pop()
        if u in used:
            continue
        solution = solutions[j]
        if version != solution.version:
            if not solution.can_add(u):
                continue
            new_value = solution.value_with(u)
            gain = new_value - solution.value
            if gain > 0:
                queue.push(gain, u, j, solution.version, new_value)
            continue
        solution.accept(u, new_value)
        used.add(u)
        path.append((u, j))

    return PairSearchResult(solutions, path)


def eager_pair_search(instance: ProblemInstance, ell: int, elements: Sequence[int]) -> PairSearchResult:
    """Full rescan of every pair before each acceptance"""
    check_ell(ell)
    solutions = _open_solutions(instance, ell)
    used: Set[int] = set()
    path: List[Pair] = []

    while True:
        best: Optional[Tuple[Tuple[float, int, int], float]] = None
        for u in elements:
            if u in used:
                continue
            for j, solution in enumerate(solutions):
                if not solution.can_add(u):
                    continue
                new_value = solution.value_with(u)
                gain = new_value - solution.value
                if gain <= 0:
                    continue
                key = (-gain, u, j)
                if best is None or key < best[0]:
                    best = (key, new_value)
        if best is None:
            break
        (_, u, j), new_value = best
        solutions[j].accept(u, new_value)
        used.add(u)
        path.append((u, j))

    return PairSearchResult(solutions, path)


def below_gate(gain: float, gate: float) -> bool:
    """Gate comparison with a relative slack for rounding in incremental caches"""
    return gain < gate - VALUE_TOLERANCE * max(1.0, abs(gate))


def _audit_acceptance(instance: ProblemInstance, solution: Solution, u: int, j: int, gate: float) -> None:
    before = instance.objective.evaluate(solution.members)
    after = instance.objective.evaluate((*solution.members, u))
    if below_gate(after - before, gate):
        raise ThresholdAuditError(u, j, after - before, gate)


def threshold_sweep(
    instance: ProblemInstance,
    ell: int,
    eps: float,
    elements: Sequence[int],
    rho: float = 0.0,
    use_knapsacks: bool = False,
    audit: Optional[bool] = None,
) -> SweepResult:
    """Descending-threshold sweep over element-solution pairs

    Pairs are scanned in ascending (element, solution) order within a round
    and an acceptance takes effect immediately. With knapsacks, a pair that
    clears the gate max(τ, ρ Σ_r c_r(u)) but breaks a budget sets E.

    The last observed gain of each pair bounds its current gain from above,
    so a pair whose bound is below the gate is skipped without a query.
    """
    check_ell(ell)
    check_epsilon(eps)
    if rho < 0:
        raise ParameterError(f"Density threshold ρ must be non-negative, got {rho}")
    audit = settings.audit_thresholds if audit is None else audit
    knapsacks = instance.knapsacks if use_knapsacks else None

    solutions = _open_solutions(instance, ell)
    elements = sorted(elements)
    if not elements:
        return SweepResult(solutions, [], 0, False, 0.0, None)

    delta_f, best_singleton = max_singleton(instance.f, elements)
    density_gate: Dict[int, float] = (
        {u: rho * knapsacks.cost_sum(u) for u in elements} if knapsacks is not None else {}
    )

    bounds: Dict[Pair, float] = {}
    checked: Dict[Pair, int] = {}
    dead: Set[Pair] = set()
    used: Set[int] = set()
    path: List[Pair] = []
    E = False
    rounds = 0

    tau = delta_f
    floor = (eps / len(elements)) * delta_f
    while tau > floor:
        rounds += 1
        for u in elements:
            if u in used:
                continue
            gate = max(tau, density_gate.get(u, 0.0))
            for j, solution in enumerate(solutions):
                pair = (u, j)
                if pair in dead or below_gate(bounds.get(pair, math.inf), gate):
                    continue
                if checked.get(pair) != solution.version:
                    if not solution.can_add(u):
                        dead.add(pair)
                        continue
                    checked[pair] = solution.version
                new_value = solution.value_with(u)
                gain = new_value - solution.value
                bounds[pair] = gain
                if below_gate(gain, gate):
                    continue
                if knapsacks is not None and not solution.fits_knapsacks(u):
                    E = True
                    dead.add(pair)
                    continue
                if audit:
                    _audit_acceptance(instance, solution, u, j, gate)
                solution.accept(u, new_value)
                used.add(u)
                path.append(pair)
                break
        tau *= 1.0 - eps

    return SweepResult(solutions, path, rounds, E, delta_f, best_singleton)
