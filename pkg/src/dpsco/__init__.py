"""Differentially private stochastic convex optimization toolkit.

Linear-time private optimizers (growing-batch one-pass noisy SGD, iterative
localization by phases, strongly convex variants), the analytic Renyi-DP
accountant that certifies them, closed-form synthetic problem instances, and
an empirical harness that checks the analytic claims at desk scale.
"""

__version__ = "0.1.0"

from .accountant import (
    ApproxDP,
    PrivacyBudget,
    ShiftSequence,
    compose,
    gaussian_mechanism_budget,
    gaussian_renyi,
    optimal_single_shift_allocation,
    pai_divergence_general,
    pai_rho,
    rdp_to_dp,
    rdp_to_dp_general,
)
from .geometry import (
    ContractionReport,
    ConvexDomain,
    check_contraction,
    gradient_step_map,
    project,
)
from .losses import (
    Dataset,
    LossFamily,
    SyntheticDistribution,
    absolute_deviation_uniform,
    batch_grad,
    dataset_from_csv,
    dataset_to_csv,
    grad,
    linear_regression_sphere,
    logistic_sphere,
    population_loss_estimate,
    quadratic_gaussian,
    quadratic_point_mass,
    quadratic_sphere,
    sample_dataset,
)
from .optimizers import (
    NoiseStream,
    PhaseRecord,
    RunRecord,
    phased_erm,
    phased_sgd,
    pnsgd,
    psgd,
    run_record_to_json,
    sc_reduction,
    sc_snowball,
    sc_weighted_sgd,
)
from .schedules import (
    AveragingWeights,
    Schedule,
    constant_step,
    jnn_steps,
    phase_plan,
    sc_weights,
    snowball_batches,
)
from .empirics import (
    CounterexampleReport,
    SweepResult,
    counterexample_empirical,
    counterexample_exact,
    default_k_grid,
    excess_loss_sweep,
    sensitivity_probe,
)

__all__ = [name for name in dir() if not name.startswith("_")]
