"""Linear bandits with infrequent exploration."""

from .environment import (
    BanditInstance,
    RegretAccount,
    generate_instance,
    make_lower_bound_instance,
    min_gap,
    record_step,
    sample_reward,
)
from .linalg import (
    RidgeState,
    confidence_radius,
    inv_sqrt_factor,
    mahalanobis_inv_norm_sq,
    new_ridge_state,
    rank_one_update,
)
from .policies import PolicyConfig, make_policy
from .schedules import Schedule, exploration_count, is_exploration, nth_exploration_step
from .simulator import ExperimentSpec, RunTrace, lower_bound_experiment, run_experiment, run_single

__version__ = "0.1.0"
