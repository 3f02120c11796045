"""Property suites run by ``infex verify``."""

from __future__ import annotations

import numpy as np

from .environment import generate_instance, replication_seed
from .errors import InvalidArgumentError
from .oracles import (
    LemmaReport,
    check_incremental_linalg,
    check_random_walk,
    check_self_normalized,
    deterministic_checks,
    merge_reports,
)
from .policies import PolicyConfig
from .schedules import Schedule
from .simulator import run_single

SUITES = ("all", "linalg", "lemmas", "equivalence")
DETERMINISTIC = (
    "sherman_morrison_inverse",
    "log_det_ratio",
    "elliptical_potential",
    "alpha_bound",
    "optimal_arm_norm",
    "weyl_alpha_decomposition",
    "equivalence_always",
    "equivalence_never",
)


def benchmark_roster(ms: tuple[int, ...] = (5, 20, 100)) -> list[PolicyConfig]:
    """Greedy, LinUCB, LinTS, their periodic INFEX variants, EpsGreedy and OLSBandit."""
    roster = [PolicyConfig("Greedy"), PolicyConfig("LinUCB"), PolicyConfig("LinTS")]
    for base in ("LinUCB", "LinTS"):
        roster.extend(PolicyConfig.infex(base, Schedule.periodic(m)) for m in ms)
    roster.extend([PolicyConfig("EpsGreedy"), PolicyConfig("OLSBandit")])
    return roster


def linalg_suite(seed: int, n_runs: int = 4, dim: int = 10, horizon: int = 5000) -> list[LemmaReport]:
    reports = []
    configs = [PolicyConfig("LinUCB"), PolicyConfig("LinTS"), PolicyConfig("EpsGreedy")]
    for i in range(n_runs):
        run_seed = replication_seed(seed, i)
        instance = generate_instance(dim, 20, run_seed)
        trace = run_single(
            instance, configs[i % len(configs)], horizon, run_seed, timing=False, keep_steps=True
        )
        reports.extend(check_incremental_linalg(trace, instance))
    return merge_reports(reports)


def lemma_suite(seed: int, n_instances: int = 3, horizon: int = 2000) -> list[LemmaReport]:
    reports = []
    for i in range(n_instances):
        run_seed = replication_seed(seed, i)
        instance = generate_instance(10, 10, run_seed)
        for config in benchmark_roster():
            trace = run_single(instance, config, horizon, run_seed, timing=False, keep_steps=True)
            reports.extend(deterministic_checks(trace, instance))
    reports = merge_reports(reports)
    instance = generate_instance(5, 10, seed)
    reports.append(check_self_normalized(instance, PolicyConfig("LinUCB"), 500, 0.05, 100, seed))
    for c in (0.5, 1.0):
        reports.append(check_random_walk(c, 2000, 10_000, seed))
    return reports


def equivalence_suite(seed: int, n_seeds: int = 3, horizon: int = 1000) -> list[LemmaReport]:
    always, never = [], []
    for i in range(n_seeds):
        run_seed = replication_seed(seed, i)
        instance = generate_instance(10, 10, run_seed)

        def actions(config):
            return run_single(instance, config, horizon, run_seed, timing=False, keep_steps=True).actions

        greedy = actions(PolicyConfig("Greedy"))
        for base in ("LinUCB", "LinTS"):
            plain = actions(PolicyConfig(base))
            always.append(np.array_equal(plain, actions(PolicyConfig.infex(base, Schedule.always()))))
            never.append(np.array_equal(greedy, actions(PolicyConfig.infex(base, Schedule.never()))))
    return [
        _equality_report("equivalence_always", always),
        _equality_report("equivalence_never", never),
    ]


def _equality_report(lemma: str, matches: list[bool]) -> LemmaReport:
    failures = matches.count(False)
    return LemmaReport(
        lemma, len(matches), failures, 0.0 if failures == 0 else -1.0, failures == 0,
        "identical action sequences" if failures == 0 else f"{failures} mismatching runs",
    )


def run_suite(name: str, seed: int = 0) -> list[LemmaReport]:
    if name not in SUITES:
        raise InvalidArgumentError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    reports = []
    if name in ("all", "linalg"):
        reports.extend(linalg_suite(seed))
    if name in ("all", "lemmas"):
        reports.extend(lemma_suite(seed))
    if name in ("all", "equivalence"):
        reports.extend(equivalence_suite(seed))
    return reports
