# app/controllers/cli_controller.py

import argparse
from typing import List, Optional

from app.constants.algorithm_constants import BRUTE_FORCE_MAX_N
from app.core.config import settings
from app.core.exceptions import SubmodularError
from app.services.constraint_service import build_cardinality, build_hardness_M, hardness_max_size
from app.services.experiment_service import build_instances, load_config, run_experiment
from app.services.instance_service import ProblemInstance
from app.services.objective_service import ModularObjective
from app.services.verify_service import brute_force_opt, run_suites, write_harness_csv
from app.utils.logger_service import configure_logging, logger


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog = "subgreedy",
        description = "Greedy-family submodular maximization under k-system and knapsack constraints",
    )
    parser.add_argument("--log-level", default = None, help = "override the configured log level")
    commands = parser.add_subparsers(dest = "command", required = True)

    run = commands.add_parser("run", help = "run an experiment config and write its CSV report")
    run.add_argument("config", help = "path to the experiment JSON config")
    run.set_defaults(handler = _run)

    verify = commands.add_parser("verify", help = "run the approximation-ratio suites against brute force")
    verify.add_argument("--trials", type = int, default = None, help = "instances per suite")
    verify.add_argument("--seed", type = int, default = None, help = "harness seed")
    verify.add_argument("--output", default = None, help = "optional CSV path for the harness table")
    verify.set_defaults(handler = _verify)

    hardness = commands.add_parser("hardness", help = "inspect the hardness systems M(k,h,m) and M'(m)")
    hardness.add_argument("--k", type = int, required = True)
    hardness.add_argument("--h", type = int, required = True)
    hardness.add_argument("--m", type = int, required = True)
    hardness.set_defaults(handler = _hardness)

    bruteforce = commands.add_parser("bruteforce", help = "print the exact optimum of tiny config instances")
    bruteforce.add_argument("config", help = "path to the experiment JSON config")
    bruteforce.set_defaults(handler = _bruteforce)

    return parser


def _run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    frame = run_experiment(config)
    print(frame.drop(columns = ["params"]).to_string(index = False))
    return 0


def _verify(args: argparse.Namespace) -> int:
    rows = run_suites(args.trials, args.seed)
    if args.output:
        write_harness_csv(rows, args.output)
    failures = [row for row in rows if not row.passed]
    print(f"{len(rows) - len(failures)}/{len(rows)} harness rows pass")
    for row in failures:
        print(f"FAIL {row.algorithm} {row.instance}: value={row.value:.6g} bound={row.bound:.6g} opt={row.opt:.6g}")
    return 1 if failures else 0


def _max_independent_size(instance: ProblemInstance) -> Optional[int]:
    if instance.n > BRUTE_FORCE_MAX_N:
        return None
    return int(round(brute_force_opt(instance).opt_value))


def _hardness(args: argparse.Namespace) -> int:
    k, h, m = args.k, args.h, args.m
    system = build_hardness_M(k, h, m)
    n = system.n
    ones = ModularObjective([1.0] * n)

    brute = _max_independent_size(ProblemInstance(ones, system, label = "M"))
    print(
        f"M(k={k}, h={h}, m={m}): n={n} knee={2 * k * m / h:g} "
        f"max_size={hardness_max_size(k, h, m):g} brute_force={'skipped' if brute is None else brute}"
    )
    brute_prime = _max_independent_size(ProblemInstance(ones, build_cardinality(n, m), label = "M'"))
    print(f"M'(m={m}): n={n} max_size={min(m, n)} brute_force={'skipped' if brute_prime is None else brute_prime}")
    return 0


def _bruteforce(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    for point in build_instances(config):
        result = brute_force_opt(point.instance)
        print(
            f"{point.instance.label}: OPT={result.opt_set!r} value={result.opt_value:.10g} "
            f"feasible_sets={result.feasible_count}"
        )
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or settings.log_level)

    try:
        return args.handler(args)
    except (SubmodularError, OSError) as error:
        logger.error(f"❌ {args.command} failed: {error}")
        return 1
