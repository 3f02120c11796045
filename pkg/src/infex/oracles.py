"""Brute-force and Monte-Carlo checks of the linear-bandit inequalities.

Every check rebuilds the design matrices ``V_t = I + sum_{s<=t} x_s x_s^T``
directly from a recorded action sequence and uses dense solves and
determinants, never the incremental Sherman-Morrison path, so a pass also
vouches for :mod:`infex.linalg`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .environment import BanditInstance, make_rng, replication_seed
from .errors import InvalidArgumentError
from .linalg import RidgeState, confidence_radius
from .policies import PolicyConfig
from .simulator import RunTrace, run_single

SLACK = 1e-9


@dataclass
class LemmaReport:
    lemma: str
    trials: int
    violations: int
    worst_margin: float
    passed: bool
    detail: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.violations <= self.trials:
            raise InvalidArgumentError("violations must lie in [0, trials]")

    def row(self) -> dict:
        return {
            "lemma": self.lemma,
            "trials": self.trials,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "detail": self.detail,
        }


def _arm_sequence(trace: RunTrace | np.ndarray, instance: BanditInstance | None) -> np.ndarray:
    if isinstance(trace, RunTrace):
        if trace.actions is None:
            raise InvalidArgumentError("trace was recorded without per-step actions")
        return instance.arms[trace.actions]
    return np.asarray(trace, dtype=np.float64)


def gram_stack(arms: np.ndarray) -> np.ndarray:
    """``V_0, ..., V_T`` as a ``(T + 1, d, d)`` array."""
    T, d = arms.shape
    stack = np.empty((T + 1, d, d))
    stack[0] = np.eye(d)
    if T:
        np.cumsum(arms[:, :, None] * arms[:, None, :], axis=0, out=stack[1:])
        stack[1:] += np.eye(d)
    return stack


def direct_log_det(stack: np.ndarray) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(stack)
    if (sign <= 0).any():
        raise ArithmeticError("design matrix is not positive definite")
    return logdet


def _report(lemma: str, margins: np.ndarray, detail: str = "") -> LemmaReport:
    margins = np.asarray(margins, dtype=np.float64)
    violations = int((margins < -SLACK).sum())
    worst = float(margins.min()) if margins.size else 0.0
    return LemmaReport(lemma, int(margins.size), violations, worst, violations == 0, detail)


def check_elliptical_potential(trace, instance: BanditInstance | None = None) -> LemmaReport:
    """Running ``sum ||x_t||^2_{V_{t-1}^{-1}}`` against ``2 log det V_t / det V_0`` at every step."""
    arms = _arm_sequence(trace, instance)
    T = len(arms)
    if T == 0:
        return _report("elliptical_potential", np.zeros(1), "empty trace")
    stack = gram_stack(arms)
    solved = np.linalg.solve(stack[:-1], arms[:, :, None])[:, :, 0]
    lhs = np.cumsum(np.einsum("ij,ij->i", arms, solved))
    alpha = direct_log_det(stack[1:])
    return _report("elliptical_potential", 2.0 * alpha - lhs)


def check_alpha_bound(trace, instance: BanditInstance | None = None) -> LemmaReport:
    """``log det V_t / det V_0 <= d log(1 + t/d)`` at every step."""
    arms = _arm_sequence(trace, instance)
    T, d = arms.shape
    stack = gram_stack(arms)
    alpha = direct_log_det(stack)
    t = np.arange(T + 1)
    bound = d * np.log1p(t / d)
    return _report("alpha_bound", bound - alpha)


def check_optimal_arm_norm(trace: RunTrace, instance: BanditInstance) -> LemmaReport:
    """``||x*||^2_{V_t^{-1}} <= ||x*||^2 / (1 + N_opt(t) ||x*||^2)`` at every step.

    For a unit-norm optimal arm the right side is ``1 / (1 + N_opt(t))``.
    """
    arms = _arm_sequence(trace, instance)
    stack = gram_stack(arms)
    x_star = instance.arms[instance.optimal_index]
    solved = np.linalg.solve(stack, np.broadcast_to(x_star, (len(stack), len(x_star)))[:, :, None])
    lhs = solved[:, :, 0] @ x_star
    n_opt = np.concatenate([[0], np.cumsum(trace.actions == instance.optimal_index)])
    sq = float(x_star @ x_star)
    if abs(sq - 1.0) <= 1e-12:
        bound = 1.0 / (1.0 + n_opt)
    else:
        bound = sq / (1.0 + n_opt * sq)
    return _report("optimal_arm_norm", bound - lhs, f"|x*|^2 = {sq:.6f}")


def check_weyl_alpha_decomposition(trace: RunTrace, instance: BanditInstance) -> LemmaReport:
    """``alpha_t <= log(1 + t) + (d-1) log(1 + N_sub(t)/(d-1))`` at every step."""
    d = instance.dim
    if d < 2:
        raise InvalidArgumentError("the decomposition needs d >= 2")
    arms = _arm_sequence(trace, instance)
    T = len(arms)
    alpha = direct_log_det(gram_stack(arms))
    t = np.arange(T + 1)
    n_sub = t - np.concatenate([[0], np.cumsum(trace.actions == instance.optimal_index)])
    bound = np.log1p(t) + (d - 1) * np.log1p(n_sub / (d - 1))
    return _report("weyl_alpha_decomposition", bound - alpha)


def self_normalized_errors(
    trace: RunTrace, instance: BanditInstance, delta: float, s_bound: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """``||theta* - theta_hat_t||_{V_t}`` and ``beta_t(delta)`` for ``t = 0..T``."""
    arms = _arm_sequence(trace, instance)
    stack = gram_stack(arms)
    d = instance.dim
    b = np.zeros((len(arms) + 1, d))
    np.cumsum(arms * trace.rewards[:, None], axis=0, out=b[1:])
    theta_hat = np.linalg.solve(stack, b[:, :, None])[:, :, 0]
    err = instance.theta_star - theta_hat
    weighted = np.sqrt(np.maximum(np.einsum("ti,tij,tj->t", err, stack, err), 0.0))
    alpha = direct_log_det(stack)
    log_term = 2.0 * math.log(1.0 / delta)
    beta = instance.sigma * np.sqrt(np.maximum(alpha, 0.0) + log_term) + s_bound
    return weighted, beta


def check_self_normalized(
    instance: BanditInstance,
    config: PolicyConfig,
    horizon: int,
    delta: float,
    n_reps: int,
    base_seed: int = 0,
    s_bound: float = 1.0,
) -> LemmaReport:
    """Fraction of runs whose estimate ever leaves the confidence ellipsoid.

    Passes when the fraction is at most ``delta + 3 sqrt(delta (1 - delta) / n_reps)``.
    With ``delta = 1`` the check is informational and always passes.
    """
    if n_reps < 100:
        raise InvalidArgumentError("need at least 100 replications")
    confidence_radius(0.0, instance.sigma, s_bound, delta)  # validates delta
    violations = 0
    worst = math.inf
    for rep in range(n_reps):
        trace = run_single(
            instance, config, horizon, replication_seed(base_seed, rep), timing=False, keep_steps=True
        )
        weighted, beta = self_normalized_errors(trace, instance, delta, s_bound)
        margin = float((beta - weighted).min())
        worst = min(worst, margin)
        if margin < 0:
            violations += 1
    fraction = violations / n_reps
    allowed = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / n_reps)
    if delta >= 1.0:
        return LemmaReport(
            "self_normalized", n_reps, violations, worst, True,
            f"informational at delta=1; violation fraction {fraction:.4f}",
        )
    return LemmaReport(
        "self_normalized", n_reps, violations, worst, fraction <= allowed,
        f"violation fraction {fraction:.4f} <= {allowed:.4f}",
    )


def random_walk_counts(
    c: float, n_walks: int, horizon: int, seed: int = 0, chunk: int = 256
) -> np.ndarray:
    """Per walk, the number of ``n <= horizon`` with ``S_n / n >= c`` for a standard Gaussian walk."""
    rng = make_rng(seed, 7)
    counts = np.empty(n_walks, dtype=np.int64)
    n = np.arange(1, horizon + 1)
    threshold = c * n
    for start in range(0, n_walks, chunk):
        rows = min(chunk, n_walks - start)
        walks = np.cumsum(rng.standard_normal((rows, horizon)), axis=1)
        counts[start : start + rows] = (walks >= threshold).sum(axis=1)
    return counts


def check_random_walk(c: float, n_walks: int, horizon: int = 10_000, seed: int = 0) -> LemmaReport:
    """Mean exceedance count against ``1 / (2 c^2)`` with a three-standard-error band.

    Truncating at ``horizon`` can only lower the count.
    """
    if not c > 0:
        raise InvalidArgumentError("c must be positive")
    if n_walks < 1000:
        raise InvalidArgumentError("need at least 1000 walks")
    counts = random_walk_counts(c, n_walks, horizon, seed)
    mean = float(counts.mean())
    se = float(counts.std(ddof=1)) / math.sqrt(n_walks)
    bound = 1.0 / (2.0 * c * c)
    limit = bound + 3.0 * se
    return LemmaReport(
        f"random_walk(c={c:g})", n_walks, int((counts > bound).sum()), limit - mean, mean <= limit,
        f"mean {mean:.4f} <= {bound:.4f} + 3*{se:.4f}",
    )


def random_walk_expectation(c: float, horizon: int) -> float:
    """Exact ``sum_{n<=horizon} P(S_n / n >= c)`` for the truncated walk."""
    n = np.arange(1, horizon + 1)
    return float(norm.sf(c * np.sqrt(n)).sum())


def check_incremental_linalg(
    trace: RunTrace, instance: BanditInstance, every: int = 100
) -> tuple[LemmaReport, LemmaReport]:
    """Replay a trace through :class:`RidgeState` and compare against direct
    inversion (elementwise ``1e-8``) and direct log-determinant (``1e-6``)."""
    arms = _arm_sequence(trace, instance)
    state = RidgeState(instance.dim)
    inv_errors, det_errors = [], []
    for t, (x, y) in enumerate(zip(arms, trace.rewards), start=1):
        state.update(x, y)
        if t % every == 0 or t == len(arms):
            direct = np.linalg.inv(state.gram)
            inv_errors.append(float(np.abs(direct - state.gram_inv).max()))
            sign, logdet = np.linalg.slogdet(state.gram)
            det_errors.append(abs(logdet - state.log_det_ratio))
    inv_errors = np.array(inv_errors)
    det_errors = np.array(det_errors)
    inv_report = LemmaReport(
        "sherman_morrison_inverse", len(inv_errors), int((inv_errors > 1e-8).sum()),
        float(1e-8 - inv_errors.max()), bool((inv_errors <= 1e-8).all()),
        f"max elementwise error {inv_errors.max():.3e}",
    )
    det_report = LemmaReport(
        "log_det_ratio", len(det_errors), int((det_errors > 1e-6).sum()),
        float(1e-6 - det_errors.max()), bool((det_errors <= 1e-6).all()),
        f"max absolute error {det_errors.max():.3e}",
    )
    return inv_report, det_report


def deterministic_checks(trace: RunTrace, instance: BanditInstance) -> list[LemmaReport]:
    reports = [
        check_elliptical_potential(trace, instance),
        check_alpha_bound(trace, instance),
        check_optimal_arm_norm(trace, instance),
    ]
    if instance.dim >= 2:
        reports.append(check_weyl_alpha_decomposition(trace, instance))
    return reports


def merge_reports(reports: list[LemmaReport]) -> list[LemmaReport]:
    """Combine reports sharing a lemma tag into one row each, keeping order."""
    merged: dict[str, LemmaReport] = {}
    for rep in reports:
        if rep.lemma not in merged:
            merged[rep.lemma] = LemmaReport(
                rep.lemma, rep.trials, rep.violations, rep.worst_margin, rep.passed, rep.detail
            )
            continue
        cur = merged[rep.lemma]
        cur.trials += rep.trials
        cur.violations += rep.violations
        cur.worst_margin = min(cur.worst_margin, rep.worst_margin)
        cur.passed = cur.passed and rep.passed
        if not rep.passed:
            cur.detail = rep.detail
    return list(merged.values())
