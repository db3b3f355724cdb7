# app/services/constraint_service.py

import bisect
from collections import Counter
from fractions import Fraction
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.constants.algorithm_constants import K_EXTENDIBLE, K_SYSTEM, KNAPSACK_TOLERANCE
from app.core.exceptions import ParameterError
from app.core.oracles import IndependenceSystem


class KnapsackSet:
    """m modular cost vectors, each normalized to a unit budget"""

    def __init__(
        self,
        n: int,
        costs: Optional[Sequence[Sequence[float]]] = None,
        budgets: Optional[Sequence[float]] = None,
    ):
        raw = np.zeros((0, n)) if costs is None else np.asarray(costs, dtype = float)
        if raw.ndim == 1:
            raw = raw.reshape(1, -1)
        if raw.shape[1] != n:
            raise ParameterError(f"Knapsack costs have {raw.shape[1]} columns, expected {n}")
        if np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise ParameterError("Knapsack costs must be finite and non-negative")

        scale = np.ones(raw.shape[0]) if budgets is None else np.asarray(budgets, dtype = float)
        if scale.shape != (raw.shape[0],):
            raise ParameterError(f"Expected {raw.shape[0]} budgets, got {len(scale)}")
        if np.any(scale <= 0):
            raise ParameterError("Knapsack budgets must be positive")

        self.n = n
        self.costs = raw / scale[:, None]
        self.costs.setflags(write = False)

    @property
    def m(self) -> int:
        return self.costs.shape[0]

    def empty_totals(self) -> np.ndarray:
        return np.zeros(self.m)

    def totals_of(self, members: Sequence[int]) -> np.ndarray:
        return self.costs[:, list(members)].sum(axis = 1)

    def cost_sum(self, u: int) -> float:
        """Σ_r c_r(u), the denominator of the density gate"""
        return float(self.costs[:, u].sum())

    def singleton_feasible(self, u: int) -> bool:
        return bool(np.all(self.costs[:, u] <= 1.0 + KNAPSACK_TOLERANCE))

    def is_feasible(self, members: Sequence[int]) -> bool:
        return bool(np.all(self.totals_of(members) <= 1.0 + KNAPSACK_TOLERANCE))


def knapsack_can_add(K: Optional[KnapsackSet], totals: np.ndarray, u: int) -> bool:
    if K is None or K.m == 0:
        return True
    return bool(np.all(totals + K.costs[:, u] <= 1.0 + KNAPSACK_TOLERANCE))


def _check_hardness_params(k: int, h: int, m: int) -> None:
    if k < 1 or h < 1 or m < 1:
        raise ParameterError(f"Hardness parameters must be positive, got k={k}, h={h}, m={m}")
    if h % (2 * k) != 0:
        raise ParameterError(f"h={h} is not a multiple of 2k={2 * k}")


def _g_exact(x: int, k: int, h: int, m: int) -> Fraction:
    knee = Fraction(2 * k * m, h)
    return min(Fraction(x), knee) + max((x - knee) / k, Fraction(0))


def g_eval(x: int, k: int, h: int, m: int) -> float:
    """Piecewise-linear weight of x elements taken from H1"""
    _check_hardness_params(k, h, m)
    if x < 0:
        raise ParameterError(f"x must be non-negative, got {x}")
    return float(_g_exact(x, k, h, m))


def hardness_max_size(k: int, h: int, m: int) -> float:
    """Largest feasible set drawn from H1 alone: k(m - 2km/h) + 2km/h"""
    _check_hardness_params(k, h, m)
    knee = Fraction(2 * k * m, h)
    return float(k * (m - knee) + knee)


class CardinalitySystem(IndependenceSystem):
    def __init__(self, n: int, m: int):
        if m < 0:
            raise ParameterError(f"Cardinality limit must be non-negative, got {m}")
        super().__init__(n, K_EXTENDIBLE, 1)
        self.m = m

    def is_independent(self, members: Sequence[int]) -> bool:
        return len(set(members)) <= self.m

    def can_add(self, members: Sequence[int], cache: Any, u: int) -> bool:
        return len(members) < self.m


class PartitionLimitSystem(IndependenceSystem):
    """At most d_g chosen elements carry label g, for every label g"""

    def __init__(
        self,
        groups: Sequence[Iterable[Hashable]],
        limits: Mapping[Hashable, int],
        declared_k: Optional[int] = None,
    ):
        self.groups: List[Tuple[Hashable, ...]] = [tuple(dict.fromkeys(labels)) for labels in groups]
        self.limits: Dict[Hashable, int] = dict(limits)

        labels = {label for element_labels in self.groups for label in element_labels}
        unknown = labels - set(self.limits)
        if unknown:
            raise ParameterError(f"No limit given for labels: {sorted(map(str, unknown))}")
        if any(limit < 0 for limit in self.limits.values()):
            raise ParameterError("Label limits must be non-negative")

        k = declared_k if declared_k is not None else max(len(labels), 1)
        super().__init__(len(self.groups), K_EXTENDIBLE, k)

    def is_independent(self, members: Sequence[int]) -> bool:
        counts = Counter(label for u in set(members) for label in self.groups[u])
        return all(count <= self.limits[label] for label, count in counts.items())

    def open_cache(self) -> Dict[Hashable, int]:
        return {}

    def can_add(self, members: Sequence[int], cache: Dict[Hashable, int], u: int) -> bool:
        return all(cache.get(label, 0) < self.limits[label] for label in self.groups[u])

    def extend_cache(self, members: Sequence[int], cache: Dict[Hashable, int], u: int) -> Dict[Hashable, int]:
        extended = dict(cache)
        for label in self.groups[u]:
            extended[label] = extended.get(label, 0) + 1
        return extended


class IntervalSeparationSystem(IndependenceSystem):
    """Chosen keys are pairwise at least `gap` apart"""

    def __init__(self, keys: Sequence[int], gap: int = 1):
        if gap < 0:
            raise ParameterError(f"Gap must be non-negative, got {gap}")
        super().__init__(len(keys), K_EXTENDIBLE, 2)
        self.keys = [int(key) for key in keys]
        self.gap = gap

    def is_independent(self, members: Sequence[int]) -> bool:
        ordered = sorted(self.keys[u] for u in set(members))
        return all(right - left >= self.gap for left, right in zip(ordered, ordered[1:]))

    def open_cache(self) -> List[int]:
        return []

    def can_add(self, members: Sequence[int], cache: List[int], u: int) -> bool:
        key = self.keys[u]
        position = bisect.bisect_left(cache, key)
        if position > 0 and key - cache[position - 1] < self.gap:
            return False
        if position < len(cache) and cache[position] - key < self.gap:
            return False
        return True

    def extend_cache(self, members: Sequence[int], cache: List[int], u: int) -> List[int]:
        extended = list(cache)
        bisect.insort(extended, self.keys[u])
        return extended


class IntersectionSystem(IndependenceSystem):
    """Feasible iff feasible in every part; k adds up across parts"""

    def __init__(self, systems: Sequence[IndependenceSystem]):
        if not systems:
            raise ParameterError("Intersection needs at least one system")
        sizes = {system.n for system in systems}
        if len(sizes) != 1:
            raise ParameterError(f"Intersected systems disagree on ground set size: {sorted(sizes)}")
        system_class = K_EXTENDIBLE if all(system.is_extendible for system in systems) else K_SYSTEM
        super().__init__(systems[0].n, system_class, sum(system.k for system in systems))
        self.parts = list(systems)

    def is_independent(self, members: Sequence[int]) -> bool:
        return all(part.is_independent(members) for part in self.parts)

    def open_cache(self) -> Tuple[Any, ...]:
        return tuple(part.open_cache() for part in self.parts)

    def can_add(self, members: Sequence[int], cache: Tuple[Any, ...], u: int) -> bool:
        return all(part.can_add(members, part_cache, u) for part, part_cache in zip(self.parts, cache))

    def extend_cache(self, members: Sequence[int], cache: Tuple[Any, ...], u: int) -> Tuple[Any, ...]:
        return tuple(
            part.extend_cache(members, part_cache, u) for part, part_cache in zip(self.parts, cache)
        )


class HardnessSystem(IndependenceSystem):
    """h groups of km elements; S feasible iff g(|S ∩ H1|) + |S \\ H1| <= m"""

    def __init__(self, k: int, h: int, m: int):
        _check_hardness_params(k, h, m)
        super().__init__(h * k * m, K_EXTENDIBLE, k)
        self.params = (k, h, m)
        self.group_size = k * m

    def group_of(self, u: int) -> int:
        return u // self.group_size

    def _fits(self, inside: int, outside: int) -> bool:
        return _g_exact(inside, *self.params) + outside <= self.params[2]

    def is_independent(self, members: Sequence[int]) -> bool:
        distinct = set(members)
        inside = sum(1 for u in distinct if self.group_of(u) == 0)
        return self._fits(inside, len(distinct) - inside)

    def open_cache(self) -> Tuple[int, int]:
        return 0, 0

    def can_add(self, members: Sequence[int], cache: Tuple[int, int], u: int) -> bool:
        inside, outside = self.extend_cache(members, cache, u)
        return self._fits(inside, outside)

    def extend_cache(self, members: Sequence[int], cache: Tuple[int, int], u: int) -> Tuple[int, int]:
        inside, outside = cache
        return (inside + 1, outside) if self.group_of(u) == 0 else (inside, outside + 1)


class KnapsackFoldedSystem(IndependenceSystem):
    """Independence system whose oracle also enforces the knapsack budgets"""

    def __init__(self, system: IndependenceSystem, knapsacks: KnapsackSet):
        super().__init__(system.n, system.system_class, system.k)
        self.system = system
        self.knapsacks = knapsacks

    def is_independent(self, members: Sequence[int]) -> bool:
        return self.system.is_independent(members) and self.knapsacks.is_feasible(members)

    def open_cache(self) -> Tuple[Any, np.ndarray]:
        return self.system.open_cache(), self.knapsacks.empty_totals()

    def can_add(self, members: Sequence[int], cache: Tuple[Any, np.ndarray], u: int) -> bool:
        inner_cache, totals = cache
        return knapsack_can_add(self.knapsacks, totals, u) and self.system.can_add(members, inner_cache, u)

    def extend_cache(self, members: Sequence[int], cache: Tuple[Any, np.ndarray], u: int) -> Tuple[Any, np.ndarray]:
        inner_cache, totals = cache
        return self.system.extend_cache(members, inner_cache, u), totals + self.knapsacks.costs[:, u]


def build_cardinality(n: int, m: int) -> CardinalitySystem:
    return CardinalitySystem(n, m)


def build_partition_limit(
    groups: Sequence[Iterable[Hashable]],
    limits: Mapping[Hashable, int],
    declared_k: Optional[int] = None,
) -> PartitionLimitSystem:
    return PartitionLimitSystem(groups, limits, declared_k)


def build_partition_matroid(labels: Sequence[Hashable], limits: Mapping[Hashable, int]) -> PartitionLimitSystem:
    """One label per element, so the system is a matroid"""
    return PartitionLimitSystem([(label,) for label in labels], limits, declared_k = 1)


def build_interval_separation(keys: Sequence[int], gap: int = 1) -> IntervalSeparationSystem:
    return IntervalSeparationSystem(keys, gap)


def build_intersection(systems: Sequence[IndependenceSystem]) -> IntersectionSystem:
    return IntersectionSystem(systems)


def build_hardness_M(k: int, h: int, m: int) -> HardnessSystem:
    return HardnessSystem(k, h, m)


def build_knapsacks(
    n: int,
    costs: Optional[Sequence[Sequence[float]]] = None,
    budgets: Optional[Sequence[float]] = None,
) -> KnapsackSet:
    return KnapsackSet(n, costs, budgets)

