# tests/test_experiment.py

import json
import os

import pandas as pd
import pytest

from app.constants.algorithm_constants import ILLUSTRATIVE_GENRE_ADJUSTMENTS, REPORT_COLUMNS
from app.core.exceptions import ConfigError, IngestError
from app.services.experiment_service import (
    build_instances,
    genre_limits,
    load_config,
    param_points,
    round_half_up,
    run_experiment,
    run_experiment_file,
)
from app.services.repeated_service import greedy
from app.services.verify_service import check_extendible

METADATA = """id,genres,year,rating
m0,Action;Drama,1990,7.5
m1,Drama,1991,6.0
m2,Comedy,1990,4.0
m3,Action,1995,8.2
m4,Comedy;Drama,1997,5.5
m5,Action,1999,6.8
"""

FEATURES = """m0,1.0,0.2,0.1
m1,0.9,0.1,0.4
m2,0.1,1.0,0.3
m3,0.2,0.3,1.0
m4,0.5,0.5,0.5
m5,0.7,0.0,0.9
"""

MODULAR = {
    "objective": {"kind": "modular", "weights": [5, 3, 1]},
    "constraint": {"class": "k-extendible", "k": 1, "parts": [{"type": "cardinality", "limit": 2}]},
    "algorithms": [{"name": "greedy"}],
    "output": "modular.csv",
}


def _movie_config(**overrides):
    config = {
        "name": "movies",
        "metadata": "metadata.csv",
        "objective": {"kind": "diverse", "lambda": 1.0, "sigma": 1.0, "features": "features.csv"},
        "constraint": {"class": "k-extendible", "k": 3, "parts": [{"type": "partition_limit"}]},
        "algorithms": [{"name": "greedy"}, {"name": "fast_sgs"}],
        "sweep": {"t": [2, 3]},
        "output": "movies.csv",
    }
    config.update(overrides)
    return config


@pytest.fixture
def write_config(tmp_path):
    (tmp_path / "metadata.csv").write_text(METADATA, encoding = "utf-8")
    (tmp_path / "features.csv").write_text(FEATURES, encoding = "utf-8")

    def write(config, name = "config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding = "utf-8")
        return str(path)

    return write


class TestGenreLimits:
    def test_round_half_up(self):
        assert [round_half_up(value) for value in (0.5, 1.5, 2.5, 2.49)] == [1, 2, 3, 2]

    def test_default_fractions(self):
        groups = [("A",), ("A", "B"), ("B",), ("C",)]
        assert genre_limits(groups, 2) == {"A": 1, "B": 1, "C": 1}

    def test_fractions_and_adjustments(self):
        groups = [("A",), ("A", "B"), ("B",), ("C",)]
        assert genre_limits(groups, 2, fractions = {"C": 0.1}, adjustments = {"A": 1.5}) == {"A": 2, "B": 1, "C": 0}


class TestConfig:
    def test_paths_resolve_against_config_dir(self, write_config, tmp_path):
        config = load_config(write_config(_movie_config()))
        assert config.metadata == os.path.join(str(tmp_path), "metadata.csv")
        assert config.output == os.path.join(str(tmp_path), "movies.csv")

    def test_invalid_epsilon(self, write_config):
        bad = dict(MODULAR, algorithms = [{"name": "fast_sgs", "eps": 0.7}])
        with pytest.raises(ConfigError):
            load_config(write_config(bad))

    def test_sigma_required_for_features(self, write_config):
        objective = {"kind": "diverse", "features": "features.csv"}
        with pytest.raises(ConfigError, match = "sigma"):
            load_config(write_config(_movie_config(objective = objective)))

    def test_missing_config(self, tmp_path):
        with pytest.raises(IngestError):
            load_config(str(tmp_path / "nope.json"))

    def test_param_points(self, write_config):
        config = load_config(write_config(_movie_config(sweep = {"t": [2, 3], "budgets": [1.0, 2.0]})))
        assert param_points(config) == [
            {"t": 2, "budget": 1.0},
            {"t": 2, "budget": 2.0},
            {"t": 3, "budget": 1.0},
            {"t": 3, "budget": 2.0},
        ]
        assert param_points(load_config(write_config(MODULAR))) == [{}]


class TestRunExperiment:
    def test_greedy_on_modular(self, write_config, tmp_path):
        frame = run_experiment_file(write_config(MODULAR))
        assert len(frame) == 1
        assert frame.loc[0, "value"] == 8.0
        assert frame.loc[0, "size"] == 2
        written = pd.read_csv(tmp_path / "modular.csv")
        assert list(written.columns) == REPORT_COLUMNS

    def test_sweep_rows(self, write_config):
        frame = run_experiment(load_config(write_config(_movie_config())), write = False)
        assert len(frame) == 4
        assert frame["algorithm"].tolist() == ["greedy", "fast_sgs", "greedy", "fast_sgs"]
        assert [json.loads(params)["t"] for params in frame["params"]] == [2, 2, 3, 3]

    def test_ell_sweep_contains_greedy(self, write_config):
        algorithms = [{"name": "greedy"}, {"name": "simultaneous_greedys", "ell_sweep": [1, 2, 3]}]
        config = load_config(write_config(_movie_config(algorithms = algorithms, sweep = {"t": [3]})))
        frame = run_experiment(config, write = False)
        assert frame["algorithm"].tolist() == [
            "greedy",
            "simultaneous_greedys",
            "simultaneous_greedys",
            "simultaneous_greedys",
            "simultaneous_greedys-best",
        ]
        ells = [json.loads(params).get("ell") for params in frame["params"]]
        single = [
            value
            for name, ell, value in zip(frame["algorithm"], ells, frame["value"])
            if name == "simultaneous_greedys" and ell == 1
        ]
        assert single == [frame.loc[0, "value"]]
        assert frame["value"].iloc[-1] == frame["value"].iloc[1:4].max()

    def test_reports_repeat(self, write_config):
        algorithms = [{"name": "sample_greedy", "seed": 3, "repeats": 4}, {"name": "repeated_greedy"}]
        config = load_config(write_config(_movie_config(algorithms = algorithms)))
        first = run_experiment(config, write = False).drop(columns = ["ms"])
        second = run_experiment(config, write = False).drop(columns = ["ms"])
        pd.testing.assert_frame_equal(first, second)
        assert len(first) == 4

    def test_illustrative_adjustments(self, write_config):
        named = _movie_config(
            constraint = {"class": "k-extendible", "k": 3, "parts": [{"type": "partition_limit", "adjustments": "illustrative"}]}
        )
        explicit = _movie_config(
            constraint = {
                "class": "k-extendible",
                "k": 3,
                "parts": [{"type": "partition_limit", "adjustments": dict(ILLUSTRATIVE_GENRE_ADJUSTMENTS)}],
            }
        )
        first = run_experiment(load_config(write_config(named, "named.json")), write = False).drop(columns = ["ms"])
        second = run_experiment(load_config(write_config(explicit, "explicit.json")), write = False).drop(columns = ["ms"])
        pd.testing.assert_frame_equal(first, second)

    def test_feature_rows_follow_metadata_ids(self, write_config, tmp_path):
        rows = FEATURES.strip().splitlines()
        (tmp_path / "shuffled.csv").write_text("\n".join(reversed(rows)) + "\n", encoding = "utf-8")
        objective = {"kind": "diverse", "lambda": 1.0, "sigma": 1.0, "features": "shuffled.csv"}
        shuffled = run_experiment(load_config(write_config(_movie_config(objective = objective), "shuffled.json")), write = False)
        ordered = run_experiment(load_config(write_config(_movie_config())), write = False)
        pd.testing.assert_frame_equal(shuffled.drop(columns = ["ms"]), ordered.drop(columns = ["ms"]))

    def test_foreign_feature_ids(self, write_config, tmp_path):
        rows = FEATURES.strip().splitlines()
        renamed = [f"x{row}" for row in rows]
        (tmp_path / "foreign.csv").write_text("\n".join(renamed) + "\n", encoding = "utf-8")
        objective = {"kind": "diverse", "lambda": 1.0, "sigma": 1.0, "features": "foreign.csv"}
        config = load_config(write_config(_movie_config(objective = objective)))
        with pytest.raises(ConfigError, match = "metadata ids"):
            build_instances(config)

    def test_unknown_adjustment_table(self, write_config):
        bad = _movie_config(
            constraint = {"class": "k-extendible", "k": 3, "parts": [{"type": "partition_limit", "adjustments": "canonical"}]}
        )
        with pytest.raises(ConfigError):
            load_config(write_config(bad))

    def test_rating_knapsack(self, write_config):
        algorithms = [{"name": "greedy"}, {"name": "knapsack_sgs", "rho": 0.1}]
        knapsacks = [{"column": "rating", "budget": 2.0}]
        config = load_config(write_config(_movie_config(algorithms = algorithms, knapsacks = knapsacks, sweep = {"t": [3]})))
        frame = run_experiment(config, write = False)
        assert frame.loc[0, "E"] == ""
        assert frame.loc[1, "E"] in (0, 1)

        instance = build_instances(config)[0].instance
        assert instance.m == 1
        report = greedy(instance.fold_knapsacks())
        assert instance.knapsacks.is_feasible(report.solution)

    def test_budget_sweep(self, write_config):
        knapsacks = [{"column": "rating", "budget": 1.0}]
        sweep = {"t": [3], "budgets": [0.5, 4.0]}
        config = load_config(write_config(_movie_config(knapsacks = knapsacks, sweep = sweep)))
        points = build_instances(config)
        assert points[0].instance.knapsacks.costs.max() > points[1].instance.knapsacks.costs.max()

    def test_config_constraint_passes_class_check(self, write_config):
        config = load_config(write_config(_movie_config()))
        for point in build_instances(config):
            assert check_extendible(point.instance.system)

    def test_missing_data_file(self, write_config):
        objective = {"kind": "diverse", "sigma": 1.0, "features": "missing.csv"}
        config = load_config(write_config(_movie_config(objective = objective)))
        with pytest.raises(IngestError, match = "missing.csv"):
            run_experiment(config, write = False)

    def test_interval_needs_years(self, write_config, tmp_path):
        (tmp_path / "metadata.csv").write_text(METADATA.replace("1995", ""), encoding = "utf-8")
        constraint = {"class": "k-extendible", "k": 2, "parts": [{"type": "interval"}]}
        config = load_config(write_config(_movie_config(constraint = constraint, sweep = {})))
        with pytest.raises(ConfigError):
            run_experiment(config, write = False)

    def test_shipped_example_runs(self):
        config = load_config(os.path.join(os.path.dirname(__file__), "..", "configs", "example.json"))
        frame = run_experiment(config, write = False)
        assert list(frame.columns) == REPORT_COLUMNS
        assert len(frame) == 3 * (len(config.algorithms) + 4)
