# app/core/oracles.py

import copy
from abc import ABC, abstractmethod
from typing import Any, Iterable, Optional, Sequence, Tuple, Union

from pydantic_core import core_schema

from app.constants.algorithm_constants import K_EXTENDIBLE, K_SYSTEM, VALUE_TOLERANCE
from app.core.config import settings
from app.core.exceptions import (
    ElementRangeError,
    EmptyGroundSetError,
    NegativeValueError,
    ParameterError,
)
from app.utils.logger_service import logger


class GroundSet:
    """Dense element ids 0..n-1"""

    def __init__(self, n: int):
        if n < 0:
            raise ParameterError(f"Ground set size must be non-negative, got {n}")
        self.n = n

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(range(self.n))

    def __contains__(self, u: object) -> bool:
        return isinstance(u, int) and 0 <= u < self.n

    def check(self, u: int) -> None:
        if u not in self:
            raise ElementRangeError(u, self.n)

    def __repr__(self) -> str:
        return f"GroundSet(n={self.n})"


class ElementSet(tuple):
    """Immutable ascending tuple of distinct element ids"""

    def __new__(cls, members: Iterable[int] = ()):
        return super().__new__(cls, sorted({int(u) for u in members}))

    @classmethod
    def __get_pydantic_core_schema__(cls, source: Any, handler: Any) -> core_schema.CoreSchema:
        return core_schema.no_info_after_validator_function(cls, handler(Tuple[int, ...]))

    def plus(self, u: int) -> "ElementSet":
        return ElementSet((*self, u))

    def minus(self, u: int) -> "ElementSet":
        return ElementSet(v for v in self if v != u)

    def __repr__(self) -> str:
        return "{" + ", ".join(str(u) for u in self) + "}"


class SetFunction(ABC):
    """Raw value oracle f: 2^N -> R

    Subclasses may keep an incremental cache per live solution: `open_cache`
    returns the cache of the empty set, `evaluate_with` returns f(S + u) from
    the cache of S, and `extend_cache` returns the cache of S + u.
    """

    def __init__(self, n: int):
        self.n = n

    @abstractmethod
    def evaluate(self, members: Sequence[int]) -> float:
        ...

    def open_cache(self) -> Any:
        return None

    def evaluate_with(self, members: Sequence[int], cache: Any, u: int) -> float:
        return self.evaluate((*members, u))

    def extend_cache(self, members: Sequence[int], cache: Any, u: int) -> Any:
        return None


class IndependenceSystem(ABC):
    """Raw independence oracle with its declared class and parameter k"""

    def __init__(self, n: int, system_class: str, k: int):
        if system_class not in (K_SYSTEM, K_EXTENDIBLE):
            raise ParameterError(f"Unknown system class: {system_class}")
        if k < 1:
            raise ParameterError(f"Declared k must be positive, got {k}")
        self.n = n
        self.system_class = system_class
        self.k = k

    @abstractmethod
    def is_independent(self, members: Sequence[int]) -> bool:
        ...

    def open_cache(self) -> Any:
        return None

    def can_add(self, members: Sequence[int], cache: Any, u: int) -> bool:
        return self.is_independent((*members, u))

    def extend_cache(self, members: Sequence[int], cache: Any, u: int) -> Any:
        return None

    def declared(self, system_class: str, k: int) -> "IndependenceSystem":
        """Same oracle under a different declaration"""
        redeclared = copy.copy(self)
        IndependenceSystem.__init__(redeclared, self.n, system_class, k)
        return redeclared

    @property
    def is_extendible(self) -> bool:
        return self.system_class == K_EXTENDIBLE


class CountedObjective:
    """Value oracle wrapper counting every query and guarding non-negativity"""

    def __init__(self, inner: SetFunction, strict: Optional[bool] = None):
        self.inner = inner
        self.calls = 0
        self.strict = settings.strict_non_negative if strict is None else strict

    @property
    def n(self) -> int:
        return self.inner.n

    def value(self, members: Sequence[int]) -> float:
        self.calls += 1
        result = float(self.inner.evaluate(members))
        self._guard(members, result)
        return result

    def value_with(self, members: Sequence[int], cache: Any, u: int) -> float:
        """f(S + u) using the incremental cache of S"""
        self.calls += 1
        result = float(self.inner.evaluate_with(members, cache, u))
        self._guard((*members, u), result)
        return result

    def open_cache(self) -> Any:
        return self.inner.open_cache()

    def extend_cache(self, members: Sequence[int], cache: Any, u: int) -> Any:
        return self.inner.extend_cache(members, cache, u)

    def _guard(self, members: Sequence[int], result: float) -> None:
        if result >= -VALUE_TOLERANCE:
            return
        if self.strict:
            logger.error(f"❌ Negative objective value {result} on {ElementSet(members)}")
            raise NegativeValueError(ElementSet(members), result)
        logger.warning(f"⚠️ Negative objective value {result} on {ElementSet(members)}")


class CountedIndependence:
    """Independence oracle wrapper counting every query"""

    def __init__(self, inner: IndependenceSystem):
        self.inner = inner
        self.calls = 0

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def declared_class(self) -> str:
        return self.inner.system_class

    @property
    def k(self) -> int:
        return self.inner.k

    def is_independent(self, members: Sequence[int]) -> bool:
        self.calls += 1
        return bool(self.inner.is_independent(members))

    def can_add(self, members: Sequence[int], cache: Any, u: int) -> bool:
        self.calls += 1
        return bool(self.inner.can_add(members, cache, u))

    def open_cache(self) -> Any:
        return self.inner.open_cache()

    def extend_cache(self, members: Sequence[int], cache: Any, u: int) -> Any:
        return self.inner.extend_cache(members, cache, u)


def marginal_gain(
    f: CountedObjective,
    u: int,
    S: Sequence[int],
    cached: Optional[float] = None,
) -> float:
    """f(u | S); one value call when f(S) is supplied, two otherwise"""
    ground = GroundSet(f.n)
    ground.check(u)
    for v in S:
        ground.check(v)
    members = ElementSet(S)
    base = f.value(members) if cached is None else cached
    return f.value(members.plus(u)) - base


def max_singleton(
    f: CountedObjective,
    N: Union[GroundSet, Iterable[int], None] = None,
) -> Tuple[float, int]:
    """Best singleton value and its lowest-id argmax"""
    elements = list(range(f.n)) if N is None else sorted(N)
    if not elements:
        raise EmptyGroundSetError("max_singleton")
    best_value, best_element = None, None
    for u in elements:
        result = f.value((u,))
        if best_value is None or result > best_value:
            best_value, best_element = result, u
    return best_value, best_element


def snapshot_counts(
    objective: CountedObjective,
    system: Optional[CountedIndependence] = None,
) -> Tuple[int, int]:
    return objective.calls, 0 if system is None else system.calls
