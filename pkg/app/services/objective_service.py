# app/services/objective_service.py

from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.constants.algorithm_constants import SYMMETRY_TOLERANCE
from app.core.exceptions import ParameterError
from app.core.oracles import IndependenceSystem, SetFunction
from app.services.constraint_service import (
    KnapsackSet,
    build_cardinality,
    build_hardness_M,
    build_intersection,
    build_interval_separation,
    build_knapsacks,
    build_partition_matroid,
)
from app.services.instance_service import ProblemInstance

OBJECTIVE_KINDS = ("monotone-coverage", "graphcut", "diverse-summarization")
CONSTRAINT_KINDS = ("cardinality", "partition-intersection", "interval", "hardness-M")
KNAPSACK_SUFFIX = "+knapsacks"


class SimilarityMatrix:
    """Symmetric similarity scores in [0, 1] with precomputed column sums"""

    def __init__(self, values: Any):
        matrix = np.array(values, dtype = float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ParameterError(f"Similarity matrix must be square, got shape {matrix.shape}")
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            raise ParameterError("Similarity entries must lie in [0, 1]")
        asymmetry = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
        if asymmetry > SYMMETRY_TOLERANCE:
            raise ParameterError(f"Similarity matrix is not symmetric (max deviation {asymmetry:.3g})")
        matrix = (matrix + matrix.T) / 2.0
        if np.any(np.diag(matrix) <= 0.0):
            raise ParameterError("Similarity diagonal must be positive")

        self.values = matrix
        self.values.setflags(write = False)
        self.column_sums = matrix.sum(axis = 0)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def cosine_kernel(V: Any, sigma: float) -> SimilarityMatrix:
    """s_ij = exp(-sigma^2 (1 - cos(v_i, v_j)))"""
    if sigma <= 0:
        raise ParameterError(f"Kernel bandwidth must be positive, got {sigma}")
    try:
        vectors = np.array(V, dtype = float)
    except ValueError as error:
        raise ParameterError(f"Feature vectors must share one dimension: {error}") from error
    if vectors.ndim != 2:
        raise ParameterError("Feature vectors must share one dimension")

    norms = np.linalg.norm(vectors, axis = 1)
    if np.any(norms == 0.0):
        raise ParameterError(f"Zero feature vector at rows {np.flatnonzero(norms == 0.0).tolist()}")

    unit = vectors / norms[:, None]
    cosine = np.clip(unit @ unit.T, -1.0, 1.0)
    kernel = np.exp(-(sigma ** 2) * (1.0 - cosine))
    np.fill_diagonal(kernel, 1.0)
    return SimilarityMatrix(kernel)


class DiverseSummarizationObjective(SetFunction):
    """f(S) = (1/n)[Σ_i Σ_{j∈S} s_ij - λ Σ_{i,j∈S} s_ij]

    The per-solution cache holds (coverage, penalty) so a query for S + u
    costs O(|S|).
    """

    def __init__(self, similarity: SimilarityMatrix, lam: float = 1.0):
        if not 0.0 <= lam <= 1.0:
            raise ParameterError(f"Penalty λ must lie in [0, 1], got {lam}")
        super().__init__(similarity.n)
        self.similarity = similarity
        self.lam = lam

    def evaluate(self, members: Sequence[int]) -> float:
        chosen = sorted(set(members))
        if not chosen or self.n == 0:
            return 0.0
        coverage = self.similarity.column_sums[chosen].sum()
        penalty = self.similarity.values[np.ix_(chosen, chosen)].sum()
        return float((coverage - self.lam * penalty) / self.n)

    def open_cache(self) -> Tuple[float, float]:
        return 0.0, 0.0

    def _extended(self, members: Sequence[int], cache: Tuple[float, float], u: int) -> Tuple[float, float]:
        coverage, penalty = cache
        values = self.similarity.values
        cross = values[u, list(members)].sum() if members else 0.0
        return coverage + self.similarity.column_sums[u], penalty + 2.0 * cross + values[u, u]

    def evaluate_with(self, members: Sequence[int], cache: Tuple[float, float], u: int) -> float:
        coverage, penalty = self._extended(members, cache, u)
        return float((coverage - self.lam * penalty) / self.n)

    def extend_cache(self, members: Sequence[int], cache: Tuple[float, float], u: int) -> Tuple[float, float]:
        return self._extended(members, cache, u)


def diverse_value(obj: DiverseSummarizationObjective, S: Iterable[int]) -> float:
    return obj.evaluate(list(S))


class ModularObjective(SetFunction):
    """f(S) = Σ_{u∈S} c_u + b"""

    def __init__(self, weights: Union[Sequence[float], Mapping[int, float]], bias: float = 0.0, n: Optional[int] = None):
        if bias < 0:
            raise ParameterError(f"Bias must be non-negative, got {bias}")
        if isinstance(weights, Mapping):
            size = n if n is not None else (max(weights) + 1 if weights else 0)
            dense = np.zeros(size)
            for u, weight in weights.items():
                dense[u] = weight
        else:
            dense = np.array(weights, dtype = float)
        super().__init__(len(dense))
        self.weights = dense
        self.bias = float(bias)

    def evaluate(self, members: Sequence[int]) -> float:
        chosen = sorted(set(members))
        return self.bias + float(self.weights[chosen].sum()) if chosen else self.bias


def modular_objective(weights: Union[Sequence[float], Mapping[int, float]], bias: float = 0.0) -> ModularObjective:
    return ModularObjective(weights, bias)


class CoverageObjective(SetFunction):
    """Weight of the union of the chosen sets"""

    def __init__(self, sets: Sequence[Iterable[Hashable]], weights: Optional[Mapping[Hashable, float]] = None):
        super().__init__(len(sets))
        self.sets = [frozenset(items) for items in sets]
        universe = set().union(*self.sets) if self.sets else set()
        self.weights: Dict[Hashable, float] = {item: 1.0 for item in universe}
        if weights is not None:
            self.weights.update({item: float(weight) for item, weight in weights.items()})
        if any(weight < 0 for weight in self.weights.values()):
            raise ParameterError("Coverage weights must be non-negative")

    def evaluate(self, members: Sequence[int]) -> float:
        covered = set().union(*(self.sets[u] for u in members)) if members else set()
        return float(sum(self.weights[item] for item in covered))

    def open_cache(self) -> Tuple[frozenset, float]:
        return frozenset(), 0.0

    def evaluate_with(self, members: Sequence[int], cache: Tuple[frozenset, float], u: int) -> float:
        covered, total = cache
        return total + sum(self.weights[item] for item in self.sets[u] - covered)

    def extend_cache(self, members: Sequence[int], cache: Tuple[frozenset, float], u: int) -> Tuple[frozenset, float]:
        covered, _ = cache
        return covered | self.sets[u], self.evaluate_with(members, cache, u)


def coverage_objective(sets: Sequence[Iterable[Hashable]], weights: Optional[Mapping[Hashable, float]] = None) -> CoverageObjective:
    return CoverageObjective(sets, weights)


class CutObjective(SetFunction):
    """Total weight of edges leaving S in an undirected graph"""

    def __init__(self, weights: Any):
        matrix = np.array(weights, dtype = float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ParameterError(f"Cut weights must be square, got shape {matrix.shape}")
        if np.any(matrix < 0) or not np.array_equal(matrix, matrix.T):
            raise ParameterError("Cut weights must be symmetric and non-negative")
        if np.any(np.diag(matrix) != 0):
            raise ParameterError("Cut weights must have a zero diagonal")
        super().__init__(matrix.shape[0])
        self.weights = matrix
        self.degrees = matrix.sum(axis = 1)

    def evaluate(self, members: Sequence[int]) -> float:
        inside = np.zeros(self.n, dtype = bool)
        inside[list(set(members))] = True
        return float(self.weights[np.ix_(inside, ~inside)].sum())

    def open_cache(self) -> float:
        return 0.0

    def evaluate_with(self, members: Sequence[int], cache: float, u: int) -> float:
        inner = self.weights[u, list(members)].sum() if members else 0.0
        return float(cache + self.degrees[u] - 2.0 * inner)

    def extend_cache(self, members: Sequence[int], cache: float, u: int) -> float:
        return self.evaluate_with(members, cache, u)


def cut_objective(weights: Any) -> CutObjective:
    return CutObjective(weights)


def parse_kind(kind: str) -> Tuple[str, str, bool]:
    """'graphcut/interval+knapsacks' -> ('graphcut', 'interval', True)"""
    with_knapsacks = kind.endswith(KNAPSACK_SUFFIX)
    body = kind[: -len(KNAPSACK_SUFFIX)] if with_knapsacks else kind
    objective_kind, _, constraint_kind = body.partition("/")
    if objective_kind not in OBJECTIVE_KINDS or constraint_kind not in CONSTRAINT_KINDS:
        raise ParameterError(
            f"Unknown instance kind '{kind}'; expected <{'|'.join(OBJECTIVE_KINDS)}>/"
            f"<{'|'.join(CONSTRAINT_KINDS)}>[{KNAPSACK_SUFFIX}]"
        )
    return objective_kind, constraint_kind, with_knapsacks


def _hardness_triples(n: int, k: Optional[int]) -> List[Tuple[int, int, int]]:
    triples = []
    for kk in ([k] if k is not None else [1, 2, 3]):
        for h in range(2 * kk, n + 1, 2 * kk):
            for m in range(1, n + 1):
                if h * kk * m <= n:
                    triples.append((kk, h, m))
    return triples


def _random_system(rng: np.random.Generator, n: int, kind: str, k: Optional[int]) -> IndependenceSystem:
    if kind == "cardinality":
        return build_cardinality(n, int(rng.integers(1, max(1, n // 2) + 1)))

    if kind == "partition-intersection":
        count = k if k is not None else int(rng.integers(1, 4))
        matroids = []
        for _ in range(count):
            labels = rng.integers(0, int(rng.integers(2, 4)), size = n).tolist()
            limits = {label: int(rng.integers(1, 3)) for label in set(labels)}
            matroids.append(build_partition_matroid(labels, limits))
        return build_intersection(matroids)

    if kind == "interval":
        keys = rng.integers(0, max(2, n // 2), size = n).tolist()
        return build_interval_separation(keys, int(rng.integers(1, 3)))

    triples = _hardness_triples(n, k)
    if not triples:
        raise ParameterError(f"No hardness system with h·k·m <= {n} for k={k}")
    largest = max(h * kk * m for kk, h, m in triples)
    triples = [triple for triple in triples if triple[0] * triple[1] * triple[2] == largest]
    return build_hardness_M(*triples[int(rng.integers(len(triples)))])


def _random_objective(rng: np.random.Generator, n: int, kind: str) -> SetFunction:
    if kind == "monotone-coverage":
        universe = max(4, 2 * n)
        sets = [rng.choice(universe, size = int(rng.integers(1, 5)), replace = False).tolist() for _ in range(n)]
        weights = {item: float(weight) for item, weight in enumerate(rng.integers(1, 6, size = universe))}
        return CoverageObjective(sets, weights)

    if kind == "graphcut":
        upper = np.triu(rng.uniform(0.0, 1.0, size = (n, n)), 1)
        return cut_objective(upper + upper.T)

    features = rng.normal(size = (n, 3))
    return DiverseSummarizationObjective(cosine_kernel(features, 1.0), 1.0)


def _random_knapsacks(rng: np.random.Generator, n: int, m: Optional[int]) -> KnapsackSet:
    count = m if m is not None else int(rng.integers(1, 3))
    return build_knapsacks(n, rng.uniform(0.05, 0.7, size = (count, n)))


def random_instance(
    seed: int,
    n: int,
    kind: str,
    k: Optional[int] = None,
    m: Optional[int] = None,
) -> ProblemInstance:
    """Seeded test instance; hardness-M kinds shrink n to h·k·m"""
    objective_kind, constraint_kind, with_knapsacks = parse_kind(kind)
    if n < 1:
        raise ParameterError(f"Random instances need n >= 1, got {n}")

    rng = np.random.default_rng(seed)
    system = _random_system(rng, n, constraint_kind, k)
    objective = _random_objective(rng, system.n, objective_kind)
    knapsacks = _random_knapsacks(rng, system.n, m) if with_knapsacks else None
    return ProblemInstance(objective, system, knapsacks, label = f"{kind}#{seed}")
