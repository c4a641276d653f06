"""Differentially private (accelerated) ADMM for graph-guided fused lasso.

Gradient-perturbed linearized ADMM solvers for equality-constrained logistic
ERM, a Renyi-DP accountant that calibrates Gaussian noise from an
(epsilon, delta) budget, LIBSVM ingestion, and a reproducible experiment
harness.
"""

from .accounting import (
    NoiseSpec,
    PrivacyBudget,
    RdpGuarantee,
    budget_alpha,
    calibrate_noise,
    classic_gaussian_sigma,
    compose_rdp,
    rdp_of_gaussian,
    rdp_to_dp,
    sample_noise,
    verify_budget,
)
from .datasets import Dataset, ParseError, dump_libsvm, load_libsvm, normalize_rows, parse_libsvm, split
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    SummaryRow,
    emit_trace_csv,
    load_config,
    parse_trace_csv,
    run_experiment,
)
from .linalg import ConvergenceError, as_csr, matvec, matvec_transpose, solve_spd, spectral_norm_sq
from .problems import (
    ConstraintSystem,
    ErmProblem,
    build_fused_lasso_constraints,
    build_graph_w,
    l1_subgradient,
    logistic_grad_clipped,
    logistic_loss,
    objective,
    r_criterion,
    smoothness_constant,
    soft_threshold,
)
from .solvers import (
    DivergenceError,
    SolveResult,
    SolverConfig,
    SolverState,
    TraceRecord,
    accuracy,
    init_dual,
    initial_state,
    momentum_point,
    resolve_gamma,
    solve,
    theta_next,
    u_update,
    x_update,
    y_update,
)

__all__ = [
    "NoiseSpec",
    "PrivacyBudget",
    "RdpGuarantee",
    "budget_alpha",
    "calibrate_noise",
    "classic_gaussian_sigma",
    "compose_rdp",
    "rdp_of_gaussian",
    "rdp_to_dp",
    "sample_noise",
    "verify_budget",
    "Dataset",
    "ParseError",
    "dump_libsvm",
    "load_libsvm",
    "normalize_rows",
    "parse_libsvm",
    "split",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "SummaryRow",
    "emit_trace_csv",
    "load_config",
    "parse_trace_csv",
    "run_experiment",
    "ConvergenceError",
    "as_csr",
    "matvec",
    "matvec_transpose",
    "solve_spd",
    "spectral_norm_sq",
    "ConstraintSystem",
    "ErmProblem",
    "build_fused_lasso_constraints",
    "build_graph_w",
    "l1_subgradient",
    "the_version",
    "logistic_grad_clipped",
    "logistic_loss",
    "objective",
    "r_criterion",
    "smoothness_constant",
    "soft_threshold",
    "DivergenceError",
    "SolveResult",
    "SolverConfig",
    "SolverState",
    "TraceRecord",
    "accuracy",
    "init_dual",
    "initial_state",
    "momentum_point",
    "resolve_gamma",
    "solve",
    "theta_next",
    "u_update",
    "x_update",
    "y_update",
]

__version__ = "0.1.0"
