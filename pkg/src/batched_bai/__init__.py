"""Batched best-arm identification for one-parameter exponential-family bandits.

Submodules:

* :mod:`~batched_bai.exp_family` -- reward families, KL divergences, instances;
* :mod:`~batched_bai.oracle` -- optimal allocation w*(mu) and T*(mu);
* :mod:`~batched_bai.stopping` -- sufficient statistics and Chernoff stopping;
* :mod:`~batched_bai.env` -- the batched environment;
* :mod:`~batched_bai.algorithms` -- Tri-BBAI, Opt-BBAI and Track-and-Stop;
* :mod:`~batched_bai.harness` -- seeded Monte Carlo runner and CSV output.
"""

from .algorithms import (
    EliminationState,
    RunResult,
    StopReason,
    TriParams,
    check_best_arm_elimination,
    opt_bbai,
    stage2_targets,
    successive_elim_round,
    track_and_stop,
    tri_bbai,
)
from .env import BatchedEnv
from .errors import (
    CapabilityError,
    ConfigurationError,
    DegenerateInstanceError,
    DomainError,
    EnvironmentExhausted,
    PreconditionError,
    RangeError,
    UndefinedStatisticError,
)
from .exp_family import BanditInstance, RewardFamily, kl
from .harness import ExperimentConfig, Summary, TrialRecord, make_instance, run_experiment, run_trial
from .oracle import (
    AllocationSolution,
    F_mu,
    I_fn,
    best_response_value,
    g_fn,
    grid_oracle,
    invert_g,
    solve_allocation,
)
from .stopping import ArmStats, beta_threshold, chernoff_Z, min_Z, tas_beta_threshold, weighted_mean

__version__ = "0.1.0"

__all__ = [
    "AllocationSolution", "ArmStats", "BanditInstance", "BatchedEnv", "CapabilityError",
    "ConfigurationError", "DegenerateInstanceError", "DomainError", "EliminationState",
    "EnvironmentExhausted", "ExperimentConfig", "F_mu", "I_fn", "PreconditionError", "RangeError",
    "RewardFamily", "RunResult", "StopReason", "Summary", "TriParams", "TrialRecord",
    "UndefinedStatisticError", "best_response_value", "beta_threshold", "check_best_arm_elimination",
    "chernoff_Z", "g_fn", "grid_oracle", "invert_g", "kl", "make_instance", "min_Z", "opt_bbai",
    "run_experiment", "run_trial", "solve_allocation", "stage2_targets", "successive_elim_round",
    "tas_beta_threshold", "track_and_stop", "tri_bbai", "weighted_mean",
]
