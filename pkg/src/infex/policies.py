"""Arm-selection policies sharing one ridge estimator.

Every policy keeps a single :class:`RidgeState` that is updated after every
step, whatever branch chose the arm.  Ties are always broken towards the
lowest arm index (``np.argmax`` semantics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .environment import BanditInstance
from .errors import InvalidArgumentError
from .linalg import RidgeState, confidence_radius
from .schedules import Schedule

POLICY_KINDS = ("Greedy", "LinUCB", "LinTS", "EpsGreedy", "OLSBandit", "Infex")
INFEX_BASES = ("LinUCB", "LinTS")


@dataclass(frozen=True)
class PolicyConfig:
    """Declarative description of a policy.

    ``delta`` defaults to ``1 / horizon``, ``sigma`` to the instance's noise
    level and ``ols_q`` to the dimension.
    """

    kind: str
    base: PolicyConfig | None = None
    schedule: Schedule | None = None
    delta: float | None = None
    sigma: float | None = None
    s_bound: float = 1.0
    ols_q: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise InvalidArgumentError(f"unknown policy kind {self.kind!r}")
        if self.kind == "Infex":
            if self.base is None or self.schedule is None:
                raise InvalidArgumentError("Infex needs a base policy and a schedule")
            if self.base.kind not in INFEX_BASES:
                raise InvalidArgumentError(
                    f"Infex base must be one of {INFEX_BASES}, got {self.base.kind!r}"
                )
        elif self.base is not None or self.schedule is not None:
            raise InvalidArgumentError("only Infex takes a base policy and a schedule")
        if self.delta is not None and not 0.0 < self.delta <= 1.0:
            raise InvalidArgumentError("delta must lie in (0, 1]")
        if self.sigma is not None and self.sigma < 0:
            raise InvalidArgumentError("sigma must be nonnegative")
        if self.s_bound < 0:
            raise InvalidArgumentError("s_bound must be nonnegative")
        if self.ols_q is not None and self.ols_q < 0:
            raise InvalidArgumentError("ols_q must be nonnegative")

    @classmethod
    def infex(cls, base: str | PolicyConfig, schedule: Schedule, **kwargs: Any) -> PolicyConfig:
        if isinstance(base, str):
            base = cls(base)
        return cls("Infex", base=base, schedule=schedule, **kwargs)

    @property
    def label(self) -> str:
        if self.kind == "Infex":
            return f"INFEX({self.base.label}, {self.schedule.label})"
        return self.kind

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.base is not None:
            out["base"] = self.base.to_dict()
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        for key in ("delta", "sigma", "ols_q"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.s_bound != 1.0:
            out["s_bound"] = self.s_bound
        return out

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> PolicyConfig:
        if not isinstance(obj, dict) or "kind" not in obj:
            raise InvalidArgumentError("policy must be an object with a 'kind' key")
        extra = set(obj) - {"kind", "base", "schedule", "delta", "sigma", "s_bound", "ols_q"}
        if extra:
            raise InvalidArgumentError(f"unknown policy keys: {sorted(extra)}")
        base = obj.get("base")
        schedule = obj.get("schedule")
        return cls(
            kind=obj["kind"],
            base=cls.from_dict(base) if base is not None else None,
            schedule=Schedule.from_dict(schedule) if schedule is not None else None,
            delta=obj.get("delta"),
            sigma=obj.get("sigma"),
            s_bound=obj.get("s_bound", 1.0),
            ols_q=obj.get("ols_q"),
        )


def greedy_select(ridge: RidgeState, instance: BanditInstance) -> int:
    return int(np.argmax(instance.arms @ ridge.theta_hat))


def linucb_select(ridge: RidgeState, beta: float, instance: BanditInstance) -> int:
    """Optimistic choice ``argmax x^T theta_hat + beta ||x||_{V^{-1}}``."""
    arms = instance.arms
    widths = np.sqrt(ridge.inv_norm_sq_rows(arms))
    return int(np.argmax(arms @ ridge.theta_hat + beta * widths))


def lints_select(
    ridge: RidgeState,
    beta: float,
    rng: np.random.Generator | None,
    instance: BanditInstance,
    eta: np.ndarray | None = None,
) -> tuple[int, np.ndarray]:
    """Thompson step on ``theta_hat + beta * B @ eta`` with ``B B^T = V^{-1}``.

    ``eta`` is drawn from ``N(0, I_d)`` unless injected.  Returns the chosen
    index and the perturbation used.
    """
    if eta is None:
        eta = rng.standard_normal(ridge.dim)
    factor = ridge.inv_sqrt_factor()
    perturbed = ridge.theta_hat + beta * (factor @ eta)
    return int(np.argmax(instance.arms @ perturbed)), eta


def eps_greedy_select(
    ridge: RidgeState, t: int, rng: np.random.Generator, instance: BanditInstance
) -> tuple[int, bool]:
    # a random arm counts as exploration even when it equals the greedy arm
    if rng.random() < t ** (-1.0 / 3.0):
        return int(rng.integers(instance.n_arms)), True
    return greedy_select(ridge, instance), False


class Policy:
    """Runtime policy: ``select(t)`` picks an arm, ``observe`` feeds the reward back."""

    def __init__(
        self,
        config: PolicyConfig,
        instance: BanditInstance,
        horizon: int,
        rng: np.random.Generator,
    ):
        self.config = config
        self.instance = instance
        self.horizon = horizon
        self.rng = rng
        self.ridge = RidgeState(instance.dim)
        self.delta = config.delta if config.delta is not None else 1.0 / max(horizon, 1)
        self.sigma = config.sigma if config.sigma is not None else instance.sigma
        self.s_bound = config.s_bound

    def beta(self) -> float:
        return confidence_radius(self.ridge.log_det_ratio, self.sigma, self.s_bound, self.delta)

    def select(self, t: int) -> tuple[int, bool]:
        raise NotImplementedError

    def observe(self, index: int, reward: float) -> None:
        self.ridge.update(self.instance.arms[index], reward)


class GreedyPolicy(Policy):
    def select(self, t: int) -> tuple[int, bool]:
        return greedy_select(self.ridge, self.instance), False


class LinUCBPolicy(Policy):
    def select(self, t: int) -> tuple[int, bool]:
        return linucb_select(self.ridge, self.beta(), self.instance), True


class LinTSPolicy(Policy):
    def select(self, t: int) -> tuple[int, bool]:
        return lints_select(self.ridge, self.beta(), self.rng, self.instance)[0], True


class EpsGreedyPolicy(Policy):
    def select(self, t: int) -> tuple[int, bool]:
        return eps_greedy_select(self.ridge, t, self.rng, self.instance)


class OLSBanditPolicy(Policy):
    """Forced round-robin sampling on top of a single shared ridge estimator.

    Step ``t`` is forced while the number of forced pulls so far is below
    ``q * K * ceil(log(t + 1))``; forced pull number ``n`` plays arm
    ``n mod K``.
    """

    def __init__(self, config, instance, horizon, rng):
        super().__init__(config, instance, horizon, rng)
        self.q = config.ols_q if config.ols_q is not None else float(instance.dim)
        self.forced = 0

    def forced_budget(self, t: int) -> float:
        return self.q * self.instance.n_arms * math.ceil(math.log(t + 1))

    def select(self, t: int) -> tuple[int, bool]:
        return ols_bandit_select(self, t, self.instance)


def ols_bandit_select(state: OLSBanditPolicy, t: int, instance: BanditInstance) -> tuple[int, bool]:
    if state.forced < state.forced_budget(t):
        index = state.forced % instance.n_arms
        state.forced += 1
        return index, True
    return greedy_select(state.ridge, instance), False


class InfexPolicy(Policy):
    """Greedy on the ridge estimate, handing exploratory steps to the base selector."""

    def __init__(self, config, instance, horizon, rng):
        super().__init__(config, instance, horizon, rng)
        base = config.base
        if base.delta is not None:
            self.delta = base.delta
        if base.sigma is not None:
            self.sigma = base.sigma
        if base.s_bound != 1.0:
            self.s_bound = base.s_bound
        self.schedule = config.schedule
        self.base_kind = base.kind

    def select(self, t: int) -> tuple[int, bool]:
        return infex_step(self, t)


def infex_step(state: InfexPolicy, t: int) -> tuple[int, bool]:
    if state.schedule.contains(t):
        if state.base_kind == "LinUCB":
            return linucb_select(state.ridge, state.beta(), state.instance), True
        return lints_select(state.ridge, state.beta(), state.rng, state.instance)[0], True
    return greedy_select(state.ridge, state.instance), False


_POLICY_CLASSES = {
    "Greedy": GreedyPolicy,
    "LinUCB": LinUCBPolicy,
    "LinTS": LinTSPolicy,
    "EpsGreedy": EpsGreedyPolicy,
    "OLSBandit": OLSBanditPolicy,
    "Infex": InfexPolicy,
}


def make_policy(
    config: PolicyConfig, instance: BanditInstance, horizon: int, rng: np.random.Generator
) -> Policy:
    return _POLICY_CLASSES[config.kind](config, instance, horizon, rng)
