"""Incremental ridge-regression state with Sherman-Morrison inverse updates.

The design matrix starts at ``V_0 = I_d`` (unit regularization) and every
observation adds the outer product of the played arm.  The inverse, the
log-determinant ratio ``log det V_t / det V_0`` and the ridge estimate are
maintained in O(d^2) per step.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError, NumericDegeneracyError

REFRESH_EVERY = 1000
NEGATIVE_TOLERANCE = 1e-12


class RidgeState:
    """Ridge estimator ``theta_hat = V^{-1} b`` with ``V = I + sum x x^T``."""

    __slots__ = (
        "dim",
        "gram",
        "gram_inv",
        "reward_sum",
        "theta_hat",
        "log_det_ratio",
        "step_count",
        "_since_refresh",
    )

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise InvalidArgumentError(f"dimension must be a positive integer, got {dim!r}")
        dim = int(dim)
        self.dim = dim
        self.gram = np.eye(dim)
        self.gram_inv = np.eye(dim)
        self.reward_sum = np.zeros(dim)
        self.theta_hat = np.zeros(dim)
        self.log_det_ratio = 0.0
        self.step_count = 0
        self._since_refresh = 0

    def copy(self) -> RidgeState:
        other = RidgeState.__new__(RidgeState)
        other.dim = self.dim
        other.gram = self.gram.copy()
        other.gram_inv = self.gram_inv.copy()
        other.reward_sum = self.reward_sum.copy()
        other.theta_hat = self.theta_hat.copy()
        other.log_det_ratio = self.log_det_ratio
        other.step_count = self.step_count
        other._since_refresh = self._since_refresh
        return other

    def update(self, arm: np.ndarray, reward: float) -> RidgeState:
        """Add one observation ``(arm, reward)`` in place and return ``self``."""
        x = np.asarray(arm, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InvalidArgumentError(
                f"arm has shape {x.shape}, expected ({self.dim},)"
            )
        reward = float(reward)
        # a non-finite entry makes the sum non-finite
        if not math.isfinite(reward) or not math.isfinite(x.sum()):
            raise InvalidArgumentError("arm and reward must be finite")

        self.step_count += 1
        self._since_refresh += 1
        if x.any():
            vx = self.gram_inv @ x
            denom = 1.0 + float(x @ vx)
            self.gram_inv -= vx[:, None] * (vx / denom)
            self.gram += x[:, None] * x
            self.log_det_ratio += math.log(denom)
            self.reward_sum += reward * x
            self.theta_hat = self.gram_inv @ self.reward_sum
        if self._since_refresh >= REFRESH_EVERY:
            self.refresh()
        return self

    def refresh(self) -> None:
        """Recompute the inverse from the Gram matrix to shed rounding drift."""
        inv = np.linalg.inv(self.gram)
        self.gram_inv = 0.5 * (inv + inv.T)
        self.theta_hat = self.gram_inv @ self.reward_sum
        self._since_refresh = 0

    def inv_norm_sq(self, x: np.ndarray) -> float:
        """Return ``x^T V^{-1} x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InvalidArgumentError(
                f"vector has shape {x.shape}, expected ({self.dim},)"
            )
        return _clamp_quadratic(float(x @ self.gram_inv @ x))

    def inv_norm_sq_rows(self, arms: np.ndarray) -> np.ndarray:
        """Vectorised ``x^T V^{-1} x`` for each row of ``arms``."""
        q = np.einsum("ij,ij->i", arms @ self.gram_inv, arms)
        lowest = q.min()
        if lowest < 0.0:
            if lowest < -NEGATIVE_TOLERANCE:
                raise NumericDegeneracyError(
                    f"negative quadratic form {lowest:.3e}; inverse Gram matrix is corrupted"
                )
            q = np.maximum(q, 0.0)
        return q

    def inv_sqrt_factor(self) -> np.ndarray:
        """Lower-triangular ``B`` with ``B @ B.T == V^{-1}``."""
        try:
            return np.linalg.cholesky(self.gram_inv)
        except np.linalg.LinAlgError as exc:
            raise NumericDegeneracyError(
                "inverse Gram matrix lost positive definiteness"
            ) from exc


def _clamp_quadratic(value: float) -> float:
    if value < 0.0:
        if value < -NEGATIVE_TOLERANCE:
            raise NumericDegeneracyError(
                f"negative quadratic form {value:.3e}; inverse Gram matrix is corrupted"
            )
        return 0.0
    return value


def new_ridge_state(dim: int) -> RidgeState:
    return RidgeState(dim)


def rank_one_update(state: RidgeState, arm: np.ndarray, reward: float) -> RidgeState:
    return state.update(arm, reward)


def mahalanobis_inv_norm_sq(state: RidgeState, x: np.ndarray) -> float:
    return state.inv_norm_sq(x)


def inv_sqrt_factor(state: RidgeState) -> np.ndarray:
    return state.inv_sqrt_factor()


def confidence_radius(alpha: float, sigma: float, s_bound: float, delta: float) -> float:
    """Confidence half-width ``sigma * sqrt(alpha + 2 log(1/delta)) + s_bound``.

    ``alpha`` is the log-determinant ratio of the design matrix and ``delta``
    the failure probability.
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidArgumentError(f"delta must lie in (0, 1], got {delta!r}")
    if alpha < 0.0 or sigma < 0.0 or s_bound < 0.0:
        raise InvalidArgumentError("alpha, sigma and s_bound must be nonnegative")
    return sigma * math.sqrt(alpha + 2.0 * math.log(1.0 / delta)) + s_bound
