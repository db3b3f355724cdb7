# app/models/models.py

from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.constants.algorithm_constants import K_EXTENDIBLE, K_SYSTEM
from app.core.oracles import ElementSet


class Candidate(BaseModel):
    label: str
    members: ElementSet
    value: float


class RunReport(BaseModel):
    algorithm: str
    params: Dict[str, Any] = Field(default_factory = dict)
    solution: ElementSet
    value: float
    value_calls: int
    independence_calls: int
    E: Optional[bool] = None
    candidates: List[Candidate] = Field(default_factory = list)
    # accepted (element, solution index) pairs in acceptance order
    path: List[Tuple[int, int]] = Field(default_factory = list)
    stats: Dict[str, Any] = Field(default_factory = dict)

    @property
    def size(self) -> int:
        return len(self.solution)

    @property
    def calls(self) -> int:
        return self.value_calls + self.independence_calls


class SgsParams(BaseModel):
    ell: int = Field(ge = 1)
    eps: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    rho: float = Field(default = 0.0, ge = 0.0)
    delta: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    monotone: bool = False
    system_class: Literal["k-system", "k-extendible"] = K_EXTENDIBLE
    k: int = Field(ge = 1)
    m: int = Field(default = 0, ge = 0)

    @property
    def p(self) -> int:
        """Exchange bound of the simultaneous greedy analysis"""
        if self.system_class == K_SYSTEM:
            return self.k + self.ell - 1
        return max(self.k, self.ell - 1)


class RgParams(BaseModel):
    ell: int = Field(ge = 1)
    alpha: float = Field(default = 3.0, ge = 2.0)
    eps: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    rho: float = Field(default = 0.0, ge = 0.0)
    delta: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    monotone: bool = False
    k: int = Field(ge = 1)
    m: int = Field(default = 0, ge = 0)

    @property
    def denominator(self) -> float:
        return self.k + 2 * self.m + 1 + self.alpha * (self.ell - 1) / 2


class BruteForceResult(BaseModel):
    opt_set: ElementSet
    opt_value: float
    feasible_count: int


class HarnessRow(BaseModel):
    instance: str
    algorithm: str
    value: float
    opt: float
    ratio: float
    calls: int
    bound: float
    passed: bool = Field(alias = "pass")

    model_config = ConfigDict(populate_by_name = True)


# Experiment configuration


class ObjectiveSpec(BaseModel):
    kind: Literal["diverse", "modular"] = "diverse"
    lam: float = Field(default = 1.0, alias = "lambda", ge = 0.0, le = 1.0)
    sigma: Optional[float] = Field(default = None, gt = 0.0)
    features: Optional[str] = None
    similarity: Optional[str] = None
    weights: Optional[List[float]] = None
    bias: float = Field(default = 0.0, ge = 0.0)

    model_config = ConfigDict(populate_by_name = True)

    @model_validator(mode = "after")
    def check_sources(self) -> "ObjectiveSpec":
        if self.kind == "modular":
            if self.weights is None:
                raise ValueError("modular objective needs `weights`")
            return self
        if (self.features is None) == (self.similarity is None):
            raise ValueError("diverse objective needs exactly one of `features` or `similarity`")
        if self.features is not None and self.sigma is None:
            raise ValueError("`sigma` is required when the kernel is built from features")
        return self


class ConstraintPart(BaseModel):
    type: Literal["cardinality", "partition_limit", "interval", "hardness"]
    # cardinality
    limit: Optional[int] = Field(default = None, ge = 0)
    # partition_limit: explicit limits, or d_g = Round(t * q_g)
    limits: Optional[Dict[str, int]] = None
    fractions: Optional[Dict[str, float]] = None
    # a mapping of per-genre factors, or "illustrative" for the shipped table
    adjustments: Optional[Union[Dict[str, float], Literal["illustrative"]]] = None
    declared_k: Optional[int] = Field(default = None, ge = 1)
    # interval
    gap: int = Field(default = 1, ge = 0)
    # hardness
    k: Optional[int] = Field(default = None, ge = 1)
    h: Optional[int] = Field(default = None, ge = 1)
    m: Optional[int] = Field(default = None, ge = 1)

    @model_validator(mode = "after")
    def check_fields(self) -> "ConstraintPart":
        if self.type == "cardinality" and self.limit is None:
            raise ValueError("cardinality part needs `limit`")
        if self.type == "hardness" and None in (self.k, self.h, self.m):
            raise ValueError("hardness part needs `k`, `h` and `m`")
        return self


class ConstraintSpec(BaseModel):
    system_class: Literal["k-system", "k-extendible"] = Field(alias = "class")
    k: int = Field(ge = 1)
    parts: List[ConstraintPart] = Field(min_length = 1)

    model_config = ConfigDict(populate_by_name = True)


class KnapsackSpec(BaseModel):
    column: Literal["rating"] = "rating"
    budget: float = Field(gt = 0.0)
    threshold: float = 5.0


class AlgorithmSpec(BaseModel):
    name: Literal[
        "greedy",
        "sample_greedy",
        "simultaneous_greedys",
        "fast_sgs",
        "knapsack_sgs",
        "density_search_sgs",
        "repeated_greedy",
        "modified_greedy",
        "modified_repeated_greedy",
        "density_search_rg",
    ]
    ell: Optional[int] = Field(default = None, ge = 1)
    ell_sweep: Optional[List[int]] = None
    eps: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    delta: Optional[float] = Field(default = None, gt = 0.0, lt = 0.5)
    rho: float = Field(default = 0.0, ge = 0.0)
    beta: Optional[float] = Field(default = None, gt = 0.0)
    seed: int = 0
    repeats: int = Field(default = 1, ge = 1)
    probability: Optional[float] = Field(default = None, gt = 0.0, le = 1.0)
    monotone: bool = False
    alpha: Optional[float] = Field(default = None, ge = 2.0)
    expand_range: bool = False

    @field_validator("ell_sweep")
    @classmethod
    def check_sweep(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and (not value or min(value) < 1):
            raise ValueError("`ell_sweep` must list positive solution counts")
        return value


class SweepSpec(BaseModel):
    t: Optional[List[float]] = None
    budgets: Optional[List[float]] = None


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    metadata: Optional[str] = None
    objective: ObjectiveSpec
    constraint: ConstraintSpec
    knapsacks: List[KnapsackSpec] = Field(default_factory = list)
    algorithms: List[AlgorithmSpec] = Field(min_length = 1)
    sweep: SweepSpec = Field(default_factory = SweepSpec)
    output: str = "report.csv"
    strict_non_negative: Optional[bool] = None
