"""Bandit linear optimization with budgeted adversarial perturbations.

A simulator for barrier-based follow-the-regularized-leader over a shrunk
action set under one-point (value only) feedback, together with adversary
generators, regret accounting, theoretical bound calculators, a constant
feedback lower-bound adversary, and a reproducible experiment harness.
"""

from .adversary import (BlackBoxAdversary, BudgetAccountant, LinearLossSequence,
                        LossEval, LossOracle, NoPerturbation,
                        PerturbationSchedule, SinusoidalPerturbation,
                        SpikePerturbation, blackbox_finalize, blackbox_query,
                        evaluate_loss, evaluate_perturbation,
                        gen_linear_sequence, sample_uniform)
from .errors import (ConfigurationError, DomainError, FactorizationError,
                     InvariantError, ProtocolError, ScribleSimError,
                     SolverError)
from .geometry import (Ball, Barrier, Box, ShrunkDomain, barrier_gradient,
                       barrier_hessian, barrier_value, dual_local_norm,
                       hessian_inverse_sqrt, hessian_sqrt_pair, local_norm,
                       minkowski_gauge, shrink)
from .harness import (ExperimentConfig, RunArtifacts, SweepArtifacts,
                      emit_plot, lowerbound_demo, run_experiment, sweep)
from .learner import (LearnerConfig, LearnerState, RoundRecord, best_iterate,
                      build_estimator, ftrl_update, init_learner,
                      propose_action, run_episode, solve_ftrl,
                      solve_ftrl_newton)
from .regret import (BoundInputs, RegretReport, compute_regret, delta_policy,
                     expected_bound, highprob_bound, highprob_interval_count,
                     linear_comparator, resolve_eta)
from .rng import RngStream, fork_stream, sample_unit_sphere
from .verify import CheckResult, verify

__version__ = "0.1.0"

__all__ = [
    "Ball", "Barrier", "BlackBoxAdversary", "BoundInputs", "Box",
    "BudgetAccountant", "CheckResult", "ConfigurationError", "DomainError",
    "ExperimentConfig", "FactorizationError", "InvariantError",
    "LearnerConfig", "LearnerState", "LinearLossSequence", "LossEval",
    "LossOracle", "NoPerturbation", "PerturbationSchedule", "ProtocolError",
    "RegretReport", "RngStream", "RoundRecord", "RunArtifacts",
    "ScribleSimError", "ShrunkDomain", "SinusoidalPerturbation",
    "SolverError", "SpikePerturbation", "SweepArtifacts",
    "barrier_gradient", "barrier_hessian", "barrier_value", "best_iterate",
    "blackbox_finalize", "blackbox_query", "build_estimator",
    "compute_regret", "delta_policy", "dual_local_norm", "emit_plot",
    "evaluate_loss", "evaluate_perturbation", "expected_bound",
    "fork_stream", "ftrl_update", "gen_linear_sequence", "hessian_inverse_sqrt",
    "hessian_sqrt_pair", "highprob_bound", "highprob_interval_count",
    "init_learner", "linear_comparator", "local_norm", "lowerbound_demo",
    "minkowski_gauge", "propose_action", "resolve_eta", "run_episode",
    "run_experiment", "sample_uniform", "sample_unit_sphere", "shrink",
    "solve_ftrl", "solve_ftrl_newton", "sweep", "verify",
]
