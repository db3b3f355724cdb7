# app/services/experiment_service.py

import json
import math
import os
import time
from collections import Counter
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.constants.algorithm_constants import ILLUSTRATIVE_GENRE_ADJUSTMENTS, REPORT_COLUMNS
from app.core.config import is_prod_env
from app.core.exceptions import ConfigError, IngestError, SubmodularError
from app.core.oracles import IndependenceSystem, SetFunction
from app.models.models import AlgorithmSpec, ConstraintPart, ExperimentConfig, RunReport
from app.services.constraint_service import (
    KnapsackSet,
    build_cardinality,
    build_hardness_M,
    build_intersection,
    build_interval_separation,
    build_knapsacks,
    build_partition_limit,
)
from app.services.ingest_service import (
    MovieMetadata,
    ingest_features,
    ingest_metadata,
    ingest_similarity,
    rating_costs,
)
from app.services.instance_service import ProblemInstance
from app.services.objective_service import DiverseSummarizationObjective, ModularObjective, cosine_kernel
from app.services.repeated_service import (
    density_search_rg,
    greedy,
    modified_greedy,
    modified_repeated_greedy,
    repeated_greedy,
    sample_greedy,
)
from app.services.sgs_service import (
    choose_ell,
    density_search_sgs,
    fast_sgs,
    knapsack_sgs,
    simultaneous_greedys,
)
from app.utils.logger_service import logger

KNAPSACK_AWARE = {
    "knapsack_sgs",
    "density_search_sgs",
    "modified_greedy",
    "modified_repeated_greedy",
    "density_search_rg",
}
ELL_SWEEPABLE = {"simultaneous_greedys", "fast_sgs", "knapsack_sgs"}


class ExperimentData(NamedTuple):
    objective: SetFunction
    metadata: Optional[MovieMetadata]


class ParamPoint(NamedTuple):
    values: Dict[str, float]
    instance: ProblemInstance


def round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def load_config(path: str) -> ExperimentConfig:
    if not os.path.isfile(path):
        raise IngestError(path, "file not found")
    with open(path, encoding = "utf-8") as handle:
        text = handle.read()
    try:
        config = ExperimentConfig.model_validate_json(text)
    except ValidationError as error:
        raise ConfigError(f"{path}: {error}") from error
    return _resolve_paths(config, os.path.dirname(os.path.abspath(path)))


def _resolve_paths(config: ExperimentConfig, base_dir: str) -> ExperimentConfig:
    """Data paths in a config file are relative to the file itself"""

    def resolve(value: Optional[str]) -> Optional[str]:
        return value if value is None or os.path.isabs(value) else os.path.join(base_dir, value)

    objective = config.objective.model_copy(
        update = {"features": resolve(config.objective.features), "similarity": resolve(config.objective.similarity)}
    )
    return config.model_copy(
        update = {"objective": objective, "metadata": resolve(config.metadata), "output": resolve(config.output)}
    )


def load_data(config: ExperimentConfig) -> ExperimentData:
    metadata = ingest_metadata(config.metadata) if config.metadata else None
    spec = config.objective

    if spec.kind == "modular":
        objective: SetFunction = ModularObjective(spec.weights, spec.bias)
    else:
        if spec.similarity is not None:
            similarity = ingest_similarity(spec.similarity)
        else:
            labels, vectors = ingest_features(spec.features)
            if metadata is not None:
                vectors = align_features(labels, vectors, metadata.ids)
            similarity = cosine_kernel(vectors, spec.sigma)
        objective = DiverseSummarizationObjective(similarity, spec.lam)

    if metadata is not None and len(metadata.ids) != objective.n:
        raise ConfigError(f"Metadata lists {len(metadata.ids)} elements but the objective has {objective.n}")
    return ExperimentData(objective, metadata)


def align_features(labels: Sequence[str], vectors: np.ndarray, ids: Sequence[str]) -> np.ndarray:
    """Reorder feature rows to follow the metadata ids"""
    position = {label: row for row, label in enumerate(labels)}
    missing = [element_id for element_id in ids if element_id not in position]
    extra = sorted(set(labels) - set(ids))
    if len(set(ids)) != len(ids):
        raise ConfigError("Metadata ids must be unique to pair them with feature rows")
    if missing or extra:
        raise ConfigError(f"Feature labels do not match metadata ids: missing {missing}, unknown {extra}")
    order = [position[element_id] for element_id in ids]
    if order != list(range(len(order))):
        logger.info("🔍 Feature rows reordered to follow the metadata ids")
    return vectors[order]


def genre_limits(
    groups: Sequence[Sequence[str]],
    t: float,
    fractions: Optional[Mapping[str, float]] = None,
    adjustments: Optional[Mapping[str, float]] = None,
) -> Dict[str, int]:
    """d_g = Round(t · q_g), q_g defaulting to the share of elements labeled g"""
    counts = Counter(label for labels in groups for label in labels)
    n = max(len(groups), 1)
    limits = {}
    for label in sorted(counts):
        share = fractions[label] if fractions and label in fractions else counts[label] / n
        share *= (adjustments or {}).get(label, 1.0)
        limits[label] = round_half_up(t * share)
    return limits


def param_points(config: ExperimentConfig) -> List[Dict[str, float]]:
    axes = []
    if config.sweep.t:
        axes.append([("t", value) for value in config.sweep.t])
    if config.sweep.budgets:
        axes.append([("budget", value) for value in config.sweep.budgets])
    return [dict(combination) for combination in product(*axes)]


def _require_metadata(data: ExperimentData, part: str) -> MovieMetadata:
    if data.metadata is None:
        raise ConfigError(f"Constraint part '{part}' needs a `metadata` file")
    return data.metadata


def _build_part(part: ConstraintPart, data: ExperimentData, point: Mapping[str, float]) -> IndependenceSystem:
    n = data.objective.n
    if part.type == "cardinality":
        return build_cardinality(n, part.limit)

    if part.type == "partition_limit":
        groups = _require_metadata(data, part.type).groups
        if part.limits is not None:
            limits = dict(part.limits)
        elif "t" in point:
            adjustments = part.adjustments
            if adjustments == "illustrative":
                logger.warning("⚠️ Using the illustrative genre adjustments; they are not canonical values")
                adjustments = ILLUSTRATIVE_GENRE_ADJUSTMENTS
            limits = genre_limits(groups, point["t"], part.fractions, adjustments)
        else:
            raise ConfigError("partition_limit needs explicit `limits` or a `sweep.t` axis")
        return build_partition_limit(groups, limits, part.declared_k)

    if part.type == "interval":
        years = _require_metadata(data, part.type).years
        missing = [index for index, year in enumerate(years) if year is None]
        if missing:
            raise ConfigError(f"interval part needs a year for every element; missing for {missing}")
        return build_interval_separation(years, part.gap)

    system = build_hardness_M(part.k, part.h, part.m)
    if system.n != n:
        raise ConfigError(f"hardness system has {system.n} elements but the objective has {n}")
    return system


def build_instance(config: ExperimentConfig, data: ExperimentData, point: Mapping[str, float]) -> ProblemInstance:
    parts = [_build_part(part, data, point) for part in config.constraint.parts]
    system = parts[0] if len(parts) == 1 else build_intersection(parts)
    system = system.declared(config.constraint.system_class, config.constraint.k)

    knapsacks: Optional[KnapsackSet] = None
    if config.knapsacks:
        ratings = _require_metadata(data, "knapsack").ratings
        costs = np.vstack([rating_costs(ratings, spec.threshold, config.metadata) for spec in config.knapsacks])
        budgets = [point.get("budget", spec.budget) for spec in config.knapsacks]
        knapsacks = build_knapsacks(data.objective.n, costs, budgets)

    label = config.name + "".join(f" {key}={value:g}" for key, value in point.items())
    return ProblemInstance(data.objective, system, knapsacks, label = label, strict = config.strict_non_negative)


def build_instances(config: ExperimentConfig) -> List[ParamPoint]:
    """Every sweep point's instance, built before any algorithm runs"""
    data = load_data(config)
    return [ParamPoint(point, build_instance(config, data, point)) for point in param_points(config)]


def _ell_for(spec: AlgorithmSpec, instance: ProblemInstance) -> int:
    if spec.ell is not None:
        return spec.ell
    system = instance.system
    return choose_ell(system.system_class, system.k, instance.m if spec.name in KNAPSACK_AWARE else 0, spec.monotone)


def _runner(spec: AlgorithmSpec, ell: Optional[int] = None) -> Callable[[ProblemInstance], RunReport]:
    name = spec.name
    if name == "greedy":
        return greedy
    if name == "sample_greedy":
        return lambda instance: sample_greedy(instance, seed = spec.seed, probability = spec.probability)
    if name == "simultaneous_greedys":
        return lambda instance: simultaneous_greedys(instance, ell or _ell_for(spec, instance))
    if name == "fast_sgs":
        return lambda instance: fast_sgs(instance, ell or _ell_for(spec, instance), spec.eps)
    if name == "knapsack_sgs":
        return lambda instance: knapsack_sgs(instance, ell or _ell_for(spec, instance), spec.rho, spec.eps)
    if name == "density_search_sgs":
        return lambda instance: density_search_sgs(
            instance, spec.ell, spec.delta, spec.eps, spec.beta, spec.monotone, spec.expand_range
        )
    if name == "repeated_greedy":
        return lambda instance: repeated_greedy(instance, spec.ell, spec.alpha, spec.monotone)
    if name == "modified_greedy":
        return lambda instance: modified_greedy(instance, spec.rho, spec.eps)
    if name == "modified_repeated_greedy":
        return lambda instance: modified_repeated_greedy(instance, spec.ell, spec.rho, spec.eps, spec.alpha, spec.monotone)
    return lambda instance: density_search_rg(
        instance, spec.ell, spec.delta, spec.eps, spec.beta, spec.alpha, spec.monotone, spec.expand_range
    )


def _timed(runner: Callable[[ProblemInstance], RunReport], instance: ProblemInstance) -> Tuple[RunReport, float]:
    started = time.perf_counter()
    report = runner(instance)
    return report, (time.perf_counter() - started) * 1000.0


def _row(algorithm: str, params: Mapping[str, Any], size: float, value: float, value_calls: float,
         independence_calls: float, E: Optional[bool], ms: float) -> Dict[str, Any]:
    return {
        "algorithm": algorithm,
        "params": json.dumps(dict(params), sort_keys = True, default = str),
        "size": size,
        "value": value,
        "value_calls": value_calls,
        "independence_calls": independence_calls,
        "E": "" if E is None else int(E),
        "ms": round(ms, 3),
    }


def _report_row(report: RunReport, point: Mapping[str, float], ms: float) -> Dict[str, Any]:
    return _row(
        report.algorithm, {**point, **report.params}, report.size, report.value,
        report.value_calls, report.independence_calls, report.E, ms,
    )


def run_algorithm(spec: AlgorithmSpec, instance: ProblemInstance, point: Mapping[str, float]) -> List[Dict[str, Any]]:
    """Report rows of one algorithm entry at one sweep point"""
    base = instance if spec.name in KNAPSACK_AWARE else instance.fold_knapsacks()

    if spec.name == "sample_greedy" and spec.repeats > 1:
        runs = [
            _timed(_runner(spec.model_copy(update = {"seed": spec.seed + offset})), base.fresh())
            for offset in range(spec.repeats)
        ]
        reports = [report for report, _ in runs]
        params = {**point, **reports[0].params, "seed": spec.seed, "repeats": spec.repeats}
        return [
            _row(
                "sample_greedy",
                params,
                float(np.mean([report.size for report in reports])),
                float(np.mean([report.value for report in reports])),
                float(np.mean([report.value_calls for report in reports])),
                float(np.mean([report.independence_calls for report in reports])),
                None,
                sum(ms for _, ms in runs),
            )
        ]

    if spec.ell_sweep and spec.name in ELL_SWEEPABLE:
        rows, runs = [], []
        for ell in spec.ell_sweep:
            report, ms = _timed(_runner(spec, ell), base.fresh())
            runs.append((report, ms))
            rows.append(_report_row(report, point, ms))
        best, _ = max(runs, key = lambda run: run[0].value)
        rows.append(
            _row(
                f"{spec.name}-best",
                {**point, "ell": best.params["ell"], "ell_sweep": spec.ell_sweep},
                best.size,
                best.value,
                sum(report.value_calls for report, _ in runs),
                sum(report.independence_calls for report, _ in runs),
                best.E,
                sum(ms for _, ms in runs),
            )
        )
        return rows

    report, ms = _timed(_runner(spec), base.fresh())
    return [_report_row(report, point, ms)]


def run_experiment(config: ExperimentConfig, write: bool = True) -> pd.DataFrame:
    """One CSV row per (sweep point, algorithm); rows follow config order"""
    points = build_instances(config)
    logger.info(f"🚀 Experiment '{config.name}': {len(points)} sweep point(s) × {len(config.algorithms)} algorithm(s)")

    rows: List[Dict[str, Any]] = []
    for point in points:
        for spec in config.algorithms:
            try:
                new_rows = run_algorithm(spec, point.instance, point.values)
            except SubmodularError as error:
                logger.error(f"❌ {spec.name} failed on {point.instance.label}: {error}")
                raise
            if not is_prod_env:
                for row in new_rows:
                    logger.info(f"📊 {row['algorithm']} {row['params']} value={row['value']}")
            rows.extend(new_rows)

    frame = pd.DataFrame(rows, columns = REPORT_COLUMNS)
    if write:
        os.makedirs(os.path.dirname(os.path.abspath(config.output)), exist_ok = True)
        frame.to_csv(config.output, index = False)
        logger.info(f"✅ Report with {len(frame)} rows written to {config.output}")
    return frame


def run_experiment_file(path: str) -> pd.DataFrame:
    return run_experiment(load_config(path))
