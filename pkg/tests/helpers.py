# tests/helpers.py

from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.services.constraint_service import build_cardinality, build_knapsacks
from app.services.greedy_engine import below_gate
from app.services.instance_service import ProblemInstance
from app.services.objective_service import CutObjective, ModularObjective, cut_objective


def modular_instance(
    weights: Sequence[float],
    limit: Optional[int] = None,
    costs: Optional[Sequence[Sequence[float]]] = None,
    strict: bool = False,
) -> ProblemInstance:
    objective = ModularObjective(weights)
    system = build_cardinality(objective.n, objective.n if limit is None else limit)
    knapsacks = build_knapsacks(objective.n, costs) if costs is not None else None
    return ProblemInstance(objective, system, knapsacks, label = "modular", strict = strict)


def triangle_cut() -> CutObjective:
    return cut_objective(np.ones((3, 3)) - np.eye(3))


def all_subsets(elements: Sequence[int]):
    for size in range(len(elements) + 1):
        yield from combinations(elements, size)


def is_feasible(instance: ProblemInstance, members: Sequence[int]) -> bool:
    if not instance.system.is_independent(members):
        return False
    return instance.knapsacks is None or instance.knapsacks.is_feasible(members)


def scratch_threshold_path(
    instance: ProblemInstance,
    ell: int,
    eps: float,
    rho: float = 0.0,
    use_knapsacks: bool = False,
) -> List[Tuple[int, int]]:
    """Descending-threshold sweep that recomputes every value from scratch"""
    f = instance.objective.evaluate
    knapsacks = instance.knapsacks if use_knapsacks else None
    elements = sorted(instance.elements)
    if not elements:
        return []

    solutions: List[List[int]] = [[] for _ in range(ell)]
    used, path = set(), []
    delta_f = max(f((u,)) for u in elements)
    tau, floor = delta_f, (eps / len(elements)) * delta_f
    while tau > floor:
        for u in elements:
            if u in used:
                continue
            gate = tau if knapsacks is None else max(tau, rho * knapsacks.cost_sum(u))
            for j, members in enumerate(solutions):
                if not instance.system.is_independent(members + [u]):
                    continue
                if below_gate(f(members + [u]) - f(members), gate):
                    continue
                if knapsacks is not None and not knapsacks.is_feasible(members + [u]):
                    continue
                members.append(u)
                used.add(u)
                path.append((u, j))
                break
        tau *= 1.0 - eps
    return path
