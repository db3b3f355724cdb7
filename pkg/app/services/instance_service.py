# app/services/instance_service.py

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.oracles import (
    CountedIndependence,
    CountedObjective,
    ElementSet,
    IndependenceSystem,
    SetFunction,
    snapshot_counts,
)
from app.core.exceptions import ParameterError
from app.models.models import Candidate, RunReport
from app.services.constraint_service import KnapsackFoldedSystem, KnapsackSet, knapsack_can_add
from app.utils.logger_service import logger


class ProblemInstance:
    """Objective, independence system and knapsacks behind counted oracles

    Elements whose singleton is infeasible are dropped from `elements` at
    construction; the raw oracles are used for that check so counters start
    at zero.
    """

    def __init__(
        self,
        objective: SetFunction,
        system: IndependenceSystem,
        knapsacks: Optional[KnapsackSet] = None,
        label: str = "instance",
        strict: Optional[bool] = None,
        elements: Optional[Sequence[int]] = None,
    ):
        if objective.n != system.n:
            raise ParameterError(f"Objective has n={objective.n} but the system has n={system.n}")
        if knapsacks is not None and knapsacks.n != system.n:
            raise ParameterError(f"Knapsacks have n={knapsacks.n} but the system has n={system.n}")

        self.objective = objective
        self.system = system
        self.knapsacks = knapsacks if knapsacks is not None and knapsacks.m > 0 else None
        self.label = label
        self.strict = strict
        self.f = CountedObjective(objective, strict)
        self.I = CountedIndependence(system)
        self.elements: List[int] = list(elements) if elements is not None else self._feasible_singletons()

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m(self) -> int:
        return 0 if self.knapsacks is None else self.knapsacks.m

    def _feasible_singletons(self) -> List[int]:
        kept = []
        for u in range(self.n):
            if not self.system.is_independent((u,)):
                logger.warning(f"⚠️ Element {u} removed: singleton violates the independence system")
                continue
            if self.knapsacks is not None and not self.knapsacks.singleton_feasible(u):
                logger.warning(f"⚠️ Element {u} removed: singleton exceeds a knapsack budget")
                continue
            kept.append(u)
        return kept

    def fresh(self) -> "ProblemInstance":
        """Same instance with zeroed counters"""
        return ProblemInstance(
            self.objective, self.system, self.knapsacks, self.label, self.strict, self.elements
        )

    def fold_knapsacks(self) -> "ProblemInstance":
        """Move the knapsacks into the independence oracle"""
        if self.knapsacks is None:
            return self.fresh()
        folded = KnapsackFoldedSystem(self.system, self.knapsacks)
        return ProblemInstance(self.objective, folded, None, self.label, self.strict, self.elements)

    def counts(self) -> Tuple[int, int]:
        return snapshot_counts(self.f, self.I)


class Solution:
    """A live candidate solution with its cached value and oracle caches"""

    def __init__(self, instance: ProblemInstance, empty_value: float):
        self.instance = instance
        self.members: List[int] = []
        self.value = empty_value
        self.f_cache: Any = instance.f.open_cache()
        self.i_cache: Any = instance.I.open_cache()
        self.totals: Optional[np.ndarray] = (
            None if instance.knapsacks is None else instance.knapsacks.empty_totals()
        )

    @property
    def version(self) -> int:
        return len(self.members)

    def can_add(self, u: int) -> bool:
        return self.instance.I.can_add(self.members, self.i_cache, u)

    def value_with(self, u: int) -> float:
        return self.instance.f.value_with(self.members, self.f_cache, u)

    def fits_knapsacks(self, u: int) -> bool:
        if self.totals is None:
            return True
        return knapsack_can_add(self.instance.knapsacks, self.totals, u)

    def accept(self, u: int, new_value: float) -> None:
        self.f_cache = self.instance.f.extend_cache(self.members, self.f_cache, u)
        self.i_cache = self.instance.I.extend_cache(self.members, self.i_cache, u)
        if self.totals is not None:
            self.totals = self.totals + self.instance.knapsacks.costs[:, u]
        self.members.append(u)
        self.value = new_value

    def element_set(self) -> ElementSet:
        return ElementSet(self.members)

    def candidate(self, label: str) -> Candidate:
        return Candidate(label = label, members = self.element_set(), value = self.value)


def best_candidate(candidates: Sequence[Candidate]) -> Optional[Candidate]:
    """Highest value; the earliest candidate wins ties"""
    best = None
    for candidate in candidates:
        if best is None or candidate.value > best.value:
            best = candidate
    return best


def finish_report(
    algorithm: str,
    instance: ProblemInstance,
    start: Tuple[int, int],
    candidates: List[Candidate],
    params: Optional[Dict[str, Any]] = None,
    E: Optional[bool] = None,
    path: Optional[List[Tuple[int, int]]] = None,
    stats: Optional[Dict[str, Any]] = None,
) -> RunReport:
    """Pick the best candidate and charge the calls made since `start`"""
    best = best_candidate(candidates)
    if best is None:
        best = Candidate(label = "empty", members = ElementSet(), value = instance.f.value(()))
        candidates = [best]

    value_calls, independence_calls = instance.counts()
    report = RunReport(
        algorithm = algorithm,
        params = params or {},
        solution = best.members,
        value = best.value,
        value_calls = value_calls - start[0],
        independence_calls = independence_calls - start[1],
        E = E if instance.m > 0 else None,
        candidates = candidates,
        path = path or [],
        stats = stats or {},
    )
    logger.debug(
        f"✅ {algorithm} on {instance.label}: |S|={report.size} value={report.value:.6g} "
        f"calls={report.value_calls}+{report.independence_calls}"
    )
    return report
