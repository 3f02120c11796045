"""Run loop, replication over random instances and aggregation."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environment import (
    POLICY_STREAM,
    REWARD_STREAM,
    BanditInstance,
    RegretAccount,
    generate_instance,
    make_lower_bound_instance,
    make_rng,
    replication_seed,
    sample_reward,
)
from .errors import InfexError, InvalidArgumentError
from .policies import PolicyConfig, make_policy
from .schedules import Schedule

CHECKPOINT_EVERY = 100


@dataclass(frozen=True)
class ExperimentSpec:
    dim: int
    n_arms: int
    horizon: int
    n_instances: int
    policies: tuple[PolicyConfig, ...]
    base_seed: int = 0
    timing_enabled: bool = True

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise InvalidArgumentError("horizon must be at least 1")
        if self.n_instances < 1:
            raise InvalidArgumentError("n_instances must be at least 1")
        if self.dim < 1 or self.n_arms < 2:
            raise InvalidArgumentError("need dim >= 1 and n_arms >= 2")
        object.__setattr__(self, "policies", tuple(self.policies))


@dataclass
class RunTrace:
    """Outcome of one policy on one instance.

    ``checkpoints`` holds the step numbers (every 100 steps plus the horizon)
    at which ``regret_curve`` and ``n_opt_curve`` were sampled.  ``actions``,
    ``rewards`` and ``explored`` are filled only when per-step traces were
    requested.
    """

    label: str
    instance_seed: int | None
    horizon: int
    checkpoints: np.ndarray
    regret_curve: np.ndarray
    n_opt_curve: np.ndarray
    final_regret: float
    n_opt: int
    n_explore: int
    total_ns: int
    failure: str | None = None
    actions: np.ndarray | None = None
    rewards: np.ndarray | None = None
    explored: np.ndarray | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None

    @property
    def per_step_ns(self) -> float:
        return self.total_ns / self.horizon if self.horizon else 0.0


def checkpoint_steps(horizon: int, every: int = CHECKPOINT_EVERY) -> np.ndarray:
    steps = list(range(every, horizon + 1, every))
    if horizon > 0 and (not steps or steps[-1] != horizon):
        steps.append(horizon)
    return np.array(steps, dtype=np.int64)


def run_single(
    instance: BanditInstance,
    config: PolicyConfig,
    horizon: int,
    seed: int,
    *,
    timing: bool = True,
    keep_steps: bool = False,
) -> RunTrace:
    """Play ``config`` on ``instance`` for ``horizon`` steps.

    Rewards come from the ``(seed, reward)`` stream with one draw per step and
    policy randomness from the ``(seed, policy)`` stream, so two runs with the
    same arguments are bit-identical.  When ``timing`` is on, wall time is
    accumulated around arm selection and the ridge update.
    """
    if horizon < 0:
        raise InvalidArgumentError("horizon must be nonnegative")
    reward_rng = make_rng(seed, REWARD_STREAM)
    policy = make_policy(config, instance, horizon, make_rng(seed, POLICY_STREAM))
    account = RegretAccount()
    checkpoints = checkpoint_steps(horizon)
    regret_curve = np.zeros(len(checkpoints))
    n_opt_curve = np.zeros(len(checkpoints), dtype=np.int64)
    if keep_steps:
        actions = np.zeros(horizon, dtype=np.int64)
        rewards = np.zeros(horizon)
        explored_flags = np.zeros(horizon, dtype=bool)

    clock = time.perf_counter_ns
    total_ns = 0
    next_cp = 0
    failure = None
    select = policy.select
    observe = policy.observe
    try:
        for t in range(1, horizon + 1):
            if timing:
                start = clock()
                index, explored = select(t)
                total_ns += clock() - start
            else:
                index, explored = select(t)
            reward = sample_reward(instance, index, reward_rng)
            account.record(instance, index, explored)
            if timing:
                start = clock()
                observe(index, reward)
                total_ns += clock() - start
            else:
                observe(index, reward)
            if keep_steps:
                actions[t - 1] = index
                rewards[t - 1] = reward
                explored_flags[t - 1] = explored
            if t == checkpoints[next_cp]:
                regret_curve[next_cp] = account.cumulative_regret
                n_opt_curve[next_cp] = account.n_opt
                next_cp += 1
    except InfexError as exc:
        failure = f"{type(exc).__name__} at step {account.steps + 1}: {exc}"

    return RunTrace(
        label=config.label,
        instance_seed=instance.seed,
        horizon=horizon,
        checkpoints=checkpoints,
        regret_curve=regret_curve,
        n_opt_curve=n_opt_curve,
        final_regret=account.cumulative_regret,
        n_opt=account.n_opt,
        n_explore=account.n_explore,
        total_ns=total_ns,
        failure=failure,
        actions=actions if keep_steps else None,
        rewards=rewards if keep_steps else None,
        explored=explored_flags if keep_steps else None,
    )


@dataclass
class PolicyAggregate:
    label: str
    n_runs: int
    n_failures: int
    mean_regret: float
    std_regret: float
    mean_ns: float
    std_ns: float
    checkpoints: np.ndarray
    mean_curve: np.ndarray
    std_curve: np.ndarray


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    traces: list[list[RunTrace]]  # [instance][policy]
    aggregates: list[PolicyAggregate] = field(default_factory=list)

    @property
    def n_failures(self) -> int:
        return sum(agg.n_failures for agg in self.aggregates)

    def policy_traces(self, policy_index: int) -> list[RunTrace]:
        return [row[policy_index] for row in self.traces]


def _sample_std(values: np.ndarray, axis: int = 0) -> np.ndarray | float:
    if values.shape[axis] < 2:
        return np.zeros_like(values.take(0, axis=axis)) if values.ndim > 1 else 0.0
    return values.std(axis=axis, ddof=1)


def aggregate(label: str, traces: list[RunTrace]) -> PolicyAggregate:
    ok = [tr for tr in traces if not tr.failed]
    checkpoints = traces[0].checkpoints
    if ok:
        finals = np.array([tr.final_regret for tr in ok])
        times = np.array([tr.total_ns for tr in ok], dtype=np.float64)
        curves = np.vstack([tr.regret_curve for tr in ok])
        mean_regret, std_regret = float(finals.mean()), float(_sample_std(finals))
        mean_ns, std_ns = float(times.mean()), float(_sample_std(times))
        mean_curve, std_curve = curves.mean(axis=0), _sample_std(curves)
    else:
        mean_regret = std_regret = mean_ns = std_ns = math.nan
        mean_curve = std_curve = np.full(len(checkpoints), math.nan)
    return PolicyAggregate(
        label=label,
        n_runs=len(ok),
        n_failures=len(traces) - len(ok),
        mean_regret=mean_regret,
        std_regret=std_regret,
        mean_ns=mean_ns,
        std_ns=std_ns,
        checkpoints=checkpoints,
        mean_curve=mean_curve,
        std_curve=std_curve,
    )


def _run_replication(spec: ExperimentSpec, index: int) -> list[RunTrace]:
    instance = generate_instance(spec.dim, spec.n_arms, replication_seed(spec.base_seed, index))
    return [
        run_single(instance, config, spec.horizon, instance.seed, timing=spec.timing_enabled)
        for config in spec.policies
    ]


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run every policy on ``n_instances`` fresh random instances.

    All policies on one instance share the same reward and policy streams
    (common random numbers).  Replications are independent, so they may run
    in a process pool; results are ordered by replication index.
    """
    if not spec.policies:
        raise InvalidArgumentError("no policies configured")
    if workers < 1:
        raise InvalidArgumentError("workers must be at least 1")
    indices = range(spec.n_instances)
    if workers == 1:
        traces = [_run_replication(spec, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_replication, [spec] * len(indices), indices))
    result = ExperimentResult(spec=spec, traces=traces)
    result.aggregates = [
        aggregate(config.label, result.policy_traces(j)) for j, config in enumerate(spec.policies)
    ]
    return result


@dataclass
class GrowthReport:
    """Mean regret per horizon and the fitted log-log slope for each schedule."""

    delta_gap: float
    horizons: list[int]
    rows: list[tuple[str, int, float, float]]  # (schedule label, T, mean, std)
    slopes: dict[str, float | None]
    notes: list[str] = field(default_factory=list)

    @property
    def insufficient_grid(self) -> bool:
        return len(self.horizons) < 2


def log_log_slope(horizons: list[int], means: list[float]) -> float | None:
    """Least-squares slope of ``log(mean regret)`` against ``log T``.

    Returns ``None`` for fewer than two horizons.  A curve that is zero at
    every horizon has not grown at all and gets slope 0; a curve that is zero
    only at some horizons is fitted on its positive points.
    """
    if len(horizons) < 2:
        return None
    x = np.log(np.asarray(horizons, dtype=np.float64))
    y = np.asarray(means, dtype=np.float64)
    positive = y > 0
    if not positive.any():
        return 0.0
    if positive.sum() < 2:
        return None
    slope, _ = np.polyfit(x[positive], np.log(y[positive]), 1)
    return float(slope)


def _lower_bound_run(args: tuple) -> float:
    dim, delta_gap, sign, config, horizon, seed = args
    instance = make_lower_bound_instance(dim, delta_gap, sign)
    trace = run_single(instance, config, horizon, seed, timing=False)
    if trace.failed:
        raise InfexError(trace.failure)
    return trace.final_regret


def lower_bound_experiment(
    delta_gap: float,
    schedule: Schedule,
    t_grid: list[int],
    n_reps: int,
    *,
    base_seed: int = 0,
    dim: int = 2,
    include_control: bool = True,
    base: str = "LinUCB",
    workers: int = 1,
) -> GrowthReport:
    """Regret growth of INFEX(base, schedule) on the two-arm ``{e_1, 0}`` instance
    where ``e_1`` is optimal, optionally paired with the always-exploring control.
    """
    if not 0.0 < delta_gap <= 1.0:
        raise InvalidArgumentError("gap must lie in (0, 1]")
    if n_reps < 1:
        raise InvalidArgumentError("n_reps must be positive")
    if not t_grid or min(t_grid) < 1:
        raise InvalidArgumentError("horizons must be positive")
    horizons = sorted(int(t) for t in t_grid)
    schedules = [schedule]
    if include_control and schedule.kind != "Always":
        schedules.append(Schedule.always())

    jobs = []
    for sched in schedules:
        config = PolicyConfig.infex(base, sched)
        for horizon in horizons:
            for rep in range(n_reps):
                seed = replication_seed(base_seed, rep)
                jobs.append((dim, delta_gap, 1, config, horizon, seed))
    if workers == 1:
        finals = [_lower_bound_run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(_lower_bound_run, jobs, chunksize=max(1, n_reps // 4)))

    rows = []
    slopes: dict[str, float | None] = {}
    pos = 0
    for sched in schedules:
        means = []
        for horizon in horizons:
            block = np.array(finals[pos : pos + n_reps])
            pos += n_reps
            mean = float(block.mean())
            std = float(block.std(ddof=1)) if n_reps > 1 else 0.0
            rows.append((sched.label, horizon, mean, std))
            means.append(mean)
        slopes[sched.label] = log_log_slope(horizons, means)
    report = GrowthReport(delta_gap=delta_gap, horizons=horizons, rows=rows, slopes=slopes)
    if report.insufficient_grid:
        report.notes.append("insufficient grid: at least two horizons are needed for a slope")
    return report
