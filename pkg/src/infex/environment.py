"""Bandit instances, reward sampling and regret bookkeeping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegenerateInstanceError, InvalidArgumentError, InvalidInstanceError

NORM_SLACK = 1e-12
TIE_THRESHOLD = 1e-9
MASK64 = (1 << 64) - 1
STREAM_MULTIPLIER = 0x9E3779B97F4A7C15

REWARD_STREAM = 0
POLICY_STREAM = 1
INSTANCE_STREAM = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(key=[seed & MASK64, stream & MASK64]))


def replication_seed(base_seed: int, index: int) -> int:
    """Seed for replication ``index``: ``base_seed XOR (index * odd constant)`` mod 2^64."""
    return (base_seed ^ ((index * STREAM_MULTIPLIER) & MASK64)) & MASK64


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Finite-armed linear bandit ``(arms, theta_star, noise)``.

    ``noise`` is ``"rademacher"`` (rewards in {-1, +1} with mean ``x^T theta``)
    or ``"gaussian"`` with standard deviation ``sigma``.
    """

    arms: np.ndarray
    theta_star: np.ndarray
    noise: str = "rademacher"
    sigma: float = 1.0
    seed: int | None = None
    means: np.ndarray = field(init=False, repr=False)
    optimal_index: int = field(init=False)
    gap: float = field(init=False)

    def __post_init__(self) -> None:
        arms = np.ascontiguousarray(np.asarray(self.arms, dtype=np.float64))
        theta = np.asarray(self.theta_star, dtype=np.float64).copy()
        if arms.ndim != 2 or arms.shape[0] < 2:
            raise InvalidArgumentError("need a (K, d) arm matrix with K >= 2")
        if theta.shape != (arms.shape[1],):
            raise InvalidArgumentError("theta_star dimension does not match the arms")
        if np.linalg.norm(arms, axis=1).max() > 1.0 + NORM_SLACK:
            raise InvalidInstanceError("arm norms must not exceed 1")
        if self.noise not in ("rademacher", "gaussian"):
            raise InvalidArgumentError(f"unknown noise model {self.noise!r}")
        if self.noise == "rademacher":
            sigma = 1.0
        else:
            sigma = float(self.sigma)
            if not sigma >= 0.0:
                raise InvalidArgumentError("sigma must be nonnegative")
        arms.setflags(write=False)
        theta.setflags(write=False)
        means = arms @ theta
        means.setflags(write=False)
        if self.noise == "rademacher" and np.abs(means).max() > 1.0 + NORM_SLACK:
            raise InvalidInstanceError("Rademacher rewards need |x^T theta| <= 1")
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "means", means)
        best, gap = _scan_gap(means)
        object.__setattr__(self, "optimal_index", best)
        object.__setattr__(self, "gap", gap)

    @property
    def dim(self) -> int:
        return self.arms.shape[1]

    @property
    def n_arms(self) -> int:
        return self.arms.shape[0]

    @property
    def optimal_value(self) -> float:
        return float(self.means[self.optimal_index])

    def to_dict(self) -> dict[str, Any]:
        return {
            "arms": self.arms.tolist(),
            "theta_star": self.theta_star.tolist(),
            "noise": self.noise,
            "sigma": self.sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> BanditInstance:
        return cls(
            arms=np.array(obj["arms"], dtype=np.float64),
            theta_star=np.array(obj["theta_star"], dtype=np.float64),
            noise=obj.get("noise", "rademacher"),
            sigma=obj.get("sigma", 1.0),
            seed=obj.get("seed"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> BanditInstance:
        return cls.from_dict(json.loads(text))


def _scan_gap(means: np.ndarray) -> tuple[int, float]:
    best = int(np.argmax(means))
    rest = np.delete(means, best)
    gap = float(means[best] - rest.max())
    if gap < NORM_SLACK:
        raise DegenerateInstanceError(f"optimal arm is not unique (gap {gap:.3e})")
    return best, gap


def min_gap(instance: BanditInstance) -> float:
    """Gap between the best arm value and the runner-up, by full scan."""
    return _scan_gap(instance.arms @ instance.theta_star)[1]


def generate_instance(dim: int, n_arms: int, seed: int) -> BanditInstance:
    """Random instance: Gaussian arms N(0, I/(2d)) clipped to the unit ball,
    ``theta_star`` uniform on the unit sphere, Rademacher rewards.

    Instances whose top two arm values are within ``1e-9`` are redrawn with
    ``seed + 1``.
    """
    if dim < 1:
        raise InvalidArgumentError("dim must be positive")
    if n_arms < 2:
        raise InvalidArgumentError("need at least two arms")
    seed = int(seed) & MASK64
    while True:
        rng = make_rng(seed, INSTANCE_STREAM)
        arms = rng.normal(0.0, math.sqrt(1.0 / (2 * dim)), size=(n_arms, dim))
        norms = np.linalg.norm(arms, axis=1)
        over = norms > 1.0
        arms[over] /= norms[over, None]
        theta = rng.standard_normal(dim)
        theta /= np.linalg.norm(theta)
        top_two = np.sort(arms @ theta)[-2:]
        if top_two[1] - top_two[0] > TIE_THRESHOLD:
            return BanditInstance(arms, theta, noise="rademacher", seed=seed)
        seed = (seed + 1) & MASK64


def make_lower_bound_instance(dim: int, delta_gap: float, sign: int = 1) -> BanditInstance:
    """Two arms ``{e_1, 0}`` with ``theta_star = (sign * gap, 0, ..., 0)`` and unit Gaussian noise."""
    if not 0.0 < delta_gap <= 1.0:
        raise InvalidArgumentError(f"gap must lie in (0, 1], got {delta_gap!r}")
    if sign not in (1, -1):
        raise InvalidArgumentError("sign must be +1 or -1")
    if dim < 1:
        raise InvalidArgumentError("dim must be positive")
    arms = np.zeros((2, dim))
    arms[0, 0] = 1.0
    theta = np.zeros(dim)
    theta[0] = sign * delta_gap
    return BanditInstance(arms, theta, noise="gaussian", sigma=1.0)


def sample_reward(instance: BanditInstance, arm_index: int, rng: np.random.Generator) -> float:
    """Draw one reward for ``arm_index``.

    Exactly one variate is consumed per call, so reward streams stay aligned
    across policies that pull different arms.
    """
    mu = float(instance.means[arm_index])
    if instance.noise == "rademacher":
        if abs(mu) > 1.0 + NORM_SLACK:
            raise InvalidInstanceError(f"mean {mu} is outside [-1, 1]")
        return 1.0 if rng.random() < 0.5 * (1.0 + mu) else -1.0
    return mu + instance.sigma * rng.standard_normal()


@dataclass
class RegretAccount:
    """Running cumulative regret, optimal-pull count and exploration count."""

    cumulative_regret: float = 0.0
    n_opt: int = 0
    n_explore: int = 0
    steps: int = 0
    trace: list[tuple[int, int, float, bool]] | None = None

    def record(self, instance: BanditInstance, chosen_index: int, explored: bool) -> float:
        reg = instance.optimal_value - float(instance.means[chosen_index])
        self.steps += 1
        self.cumulative_regret += reg
        if chosen_index == instance.optimal_index:
            self.n_opt += 1
        if explored:
            self.n_explore += 1
        if self.trace is not None:
            self.trace.append((self.steps, chosen_index, reg, explored))
        return reg


def record_step(
    account: RegretAccount, instance: BanditInstance, chosen_index: int, explored: bool
) -> RegretAccount:
    account.record(instance, chosen_index, explored)
    return account
