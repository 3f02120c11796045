"""Predetermined exploration schedules.

A schedule is a set of time steps ``T_e`` at which the exploratory base
policy runs.  Each schedule exposes the counter ``f(t) = |T_e ∩ {1..t}|``
and its generalised inverse ``f^{-1}(n) = min{t : f(t) >= n}``.

Target-count schedules are specified by a target function ``g`` and realised
by exploring whenever the running count falls behind ``floor(g(t))``.  When
``floor(g)`` is nondecreasing with unit jumps this is exactly the rule
"explore at t iff floor(g(t)) > floor(g(t-1))" and ``f(t) = floor(g(t))``.
Small-t irregularities of ``g`` (non-monotone start, jumps larger than one)
are absorbed by the catch-up counter, which keeps ``f`` monotone with
increments in {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError, UnsatisfiableError

TARGET_KINDS = ("PolyLogDivided", "Power", "LogPower", "LogLinear")
SCHEDULE_KINDS = ("Always", "Never", "Periodic") + TARGET_KINDS


def _target_value(kind: str, param: float, t: float) -> float:
    """Evaluate the target function at ``t >= 1``; ``t`` may be a big int."""
    log_t1 = math.log(t + 1)
    if kind == "PolyLogDivided":
        return t / log_t1**param
    if kind == "Power":
        return float(t) ** param
    if kind == "LogPower":
        return log_t1**param
    return param * log_t1


def _target_array(kind: str, param: float, t: np.ndarray) -> np.ndarray:
    log_t1 = np.log(t + 1.0)
    if kind == "PolyLogDivided":
        return t / log_t1**param
    if kind == "Power":
        return t**param
    if kind == "LogPower":
        return log_t1**param
    return param * log_t1


def _settle_point(kind: str, param: float) -> int:
    """A step after which ``g`` is nondecreasing with increments at most one."""
    if kind == "Power":
        # t^r with r in (0, 1] is concave and g(1) - g(0) = 1.
        return 0
    if kind == "LogLinear":
        # increment C log((t+2)/(t+1)) <= 1  <=>  t + 1 >= 1 / (e^{1/C} - 1)
        return max(0, math.ceil(1.0 / math.expm1(1.0 / param)))
    if kind == "PolyLogDivided":
        # for log(t+1) >= max(1, r) the derivative lies in [0, 1]
        return math.ceil(math.exp(max(1.0, param)))

    # LogPower: derivative r L^{r-1} / (t+1) is decreasing once L >= r - 1;
    # find the first such t where it is also <= 1.
    def slope(t: int) -> float:
        return param * math.log(t + 1) ** (param - 1) / (t + 1)

    t = max(1, math.ceil(math.exp(param - 1.0)))
    while slope(t) > 1.0:
        t *= 2
    lo, hi = t // 2, t
    lo = max(lo, math.ceil(math.exp(param - 1.0)))
    while lo < hi:
        mid = (lo + hi) // 2
        if slope(mid) <= 1.0:
            hi = mid
        else:
            lo = mid + 1
    return hi


@dataclass(frozen=True)
class Schedule:
    """Immutable exploration schedule.

    ``kind`` is one of ``Always``, ``Never``, ``Periodic`` (uses ``m``) or a
    target-count family ``PolyLogDivided`` (``r >= 0``), ``Power``
    (``r`` in (0, 1]), ``LogPower`` (``r > 1``), ``LogLinear`` (``c > 0``).
    """

    kind: str
    m: int | None = None
    r: float | None = None
    c: float | None = None
    _settle: int = field(default=0, init=False, repr=False, compare=False)
    _prefix: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)
    _settle_max: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidArgumentError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "Periodic":
            if self.m is None or int(self.m) != self.m or self.m < 1:
                raise InvalidArgumentError("Periodic schedule needs a positive integer m")
            object.__setattr__(self, "m", int(self.m))
        elif self.kind == "PolyLogDivided":
            if self.r is None or not self.r >= 0:
                raise InvalidArgumentError("PolyLogDivided needs r >= 0")
        elif self.kind == "Power":
            if self.r is None or not 0 < self.r <= 1:
                raise InvalidArgumentError("Power needs r in (0, 1]")
        elif self.kind == "LogPower":
            if self.r is None or not self.r > 1:
                raise InvalidArgumentError("LogPower needs r > 1")
        elif self.kind == "LogLinear":
            if self.c is None or not self.c > 0:
                raise InvalidArgumentError("LogLinear needs c > 0")
        if self.kind in TARGET_KINDS:
            settle = _settle_point(self.kind, self._param)
            object.__setattr__(self, "_settle", settle)
            prefix, running_max = self._catch_up_prefix(settle)
            object.__setattr__(self, "_prefix", prefix)
            object.__setattr__(self, "_settle_max", running_max)

    @classmethod
    def always(cls) -> Schedule:
        return cls("Always")

    @classmethod
    def never(cls) -> Schedule:
        return cls("Never")

    @classmethod
    def periodic(cls, m: int) -> Schedule:
        return cls("Periodic", m=m)

    @classmethod
    def poly_log_divided(cls, r: float) -> Schedule:
        return cls("PolyLogDivided", r=float(r))

    @classmethod
    def power(cls, r: float) -> Schedule:
        return cls("Power", r=float(r))

    @classmethod
    def log_power(cls, r: float) -> Schedule:
        return cls("LogPower", r=float(r))

    @classmethod
    def log_linear(cls, c: float) -> Schedule:
        return cls("LogLinear", c=float(c))

    @property
    def _param(self) -> float:
        return self.c if self.kind == "LogLinear" else self.r

    @property
    def label(self) -> str:
        if self.kind == "Periodic":
            return f"m={self.m}"
        if self.kind in ("Always", "Never"):
            return self.kind
        if self.kind == "LogLinear":
            return f"LogLinear(C={self.c:g})"
        return f"{self.kind}(r={self.r:g})"

    def target(self, t: int) -> float:
        """Target function ``g(t)`` with ``g(0) = 0``."""
        if self.kind not in TARGET_KINDS:
            raise InvalidArgumentError(f"{self.kind} schedule has no target function")
        return 0.0 if t == 0 else _target_value(self.kind, self._param, t)

    def _catch_up_prefix(self, upto: int) -> tuple[np.ndarray, int]:
        # f(t) = min(f(t-1) + 1, max(f(t-1), floor g(t)))  unrolls to
        # f(t) = t + min_{s<=t} (H(s) - s),  H = running max of floor g.
        s = np.arange(upto + 1, dtype=np.float64)
        g = np.zeros(upto + 1)
        if upto >= 1:
            g[1:] = _target_array(self.kind, self._param, s[1:])
        h = np.maximum.accumulate(np.floor(g))
        f = s + np.minimum.accumulate(h - s)
        return f.astype(np.int64), int(h[-1])

    def count(self, t: int) -> int:
        """Number of exploratory steps in ``1..t``."""
        if t < 0:
            raise InvalidArgumentError(f"t must be nonnegative, got {t}")
        if self.kind == "Always":
            return int(t)
        if self.kind == "Never":
            return 0
        if self.kind == "Periodic":
            return int(t) // self.m
        if t <= self._settle:
            return int(self._prefix[t])
        base = int(self._prefix[self._settle])
        target = max(self._settle_max, math.floor(self.target(t)))
        return min(base + (int(t) - self._settle), target)

    def contains(self, t: int) -> bool:
        """Whether step ``t >= 1`` is exploratory."""
        if self.kind == "Always":
            return True
        if self.kind == "Never":
            return False
        if self.kind == "Periodic":
            return t % self.m == 0
        return self.count(t) > self.count(t - 1)

    def nth_step(self, n: int) -> int:
        """Smallest ``t`` with ``count(t) >= n``."""
        if n < 1:
            raise InvalidArgumentError(f"n must be positive, got {n}")
        if self.kind == "Never":
            raise UnsatisfiableError("the Never schedule has no exploratory steps")
        if self.kind == "Always":
            return int(n)
        if self.kind == "Periodic":
            return self.m * int(n)
        hi = 1
        while self.count(hi) < n:
            hi *= 2
        lo = hi // 2 + 1 if hi > 1 else 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.count(mid) >= n:
                hi = mid
            else:
                lo = mid + 1
        return hi

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "Periodic":
            out["m"] = self.m
        elif self.kind == "LogLinear":
            out["c"] = self.c
        elif self.kind in TARGET_KINDS:
            out["r"] = self.r
        return out

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> Schedule:
        if not isinstance(obj, dict) or "kind" not in obj:
            raise InvalidArgumentError("schedule must be an object with a 'kind' key")
        extra = set(obj) - {"kind", "m", "r", "c"}
        if extra:
            raise InvalidArgumentError(f"unknown schedule keys: {sorted(extra)}")
        return cls(obj["kind"], m=obj.get("m"), r=obj.get("r"), c=obj.get("c"))


def is_exploration(schedule: Schedule, t: int) -> bool:
    return schedule.contains(t)


def exploration_count(schedule: Schedule, t: int) -> int:
    return schedule.count(t)


def nth_exploration_step(schedule: Schedule, n: int) -> int:
    return schedule.nth_step(n)
