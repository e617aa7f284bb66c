"""Robust Rasch item-difficulty estimation.

Fits one-parameter logistic item difficulties from binary response
matrices by marginal maximum likelihood or by minimizing empirical
density-power / gamma-divergence objectives, with sandwich standard
errors, influence-function analysis, and a seeded simulation harness for
aberrant-response studies.
"""

from .asymptotics import (
    SandwichCovariance,
    mean_psi,
    mmle_item_score,
    psi,
    psi_jacobian,
    sandwich_covariance,
)
from .estimator import RaschDifficultyEstimator
from .fitting import (
    FitConfig,
    FitError,
    FitResult,
    InnerSolveConfig,
    fit,
    fit_dpd,
    fit_gamma,
    fit_mmle,
    inner_minimize,
)
from .influence import InfluenceReport, influence_function, influence_table
from .io import RunManifest, load_responses, write_responses
from .model import (
    DEFAULT_SCALE,
    ItemBank,
    ResponseMatrix,
    enumerate_patterns,
    icc,
    log_pattern_prob_given_theta,
    marginal_pattern_prob,
    pattern_prob_given_theta,
    score_jacobian_sigma,
    score_vector_xi,
)
from .objectives import (
    dpd_majorizer,
    dpd_objective,
    gamma_majorizer,
    gamma_objective,
    mmle_objective,
    model_power_integral,
    posterior_weights,
)
from .quadrature import QuadratureGrid, build_gauss_hermite, expect_over_theta
from .simulation import (
    MetricsSummary,
    ScenarioSpec,
    SimulatedDataset,
    bias_rmse,
    generate,
    mechanism_curve,
    run_study,
    true_difficulties,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SCALE",
    "FitConfig",
    "FitError",
    "FitResult",
    "InfluenceReport",
    "InnerSolveConfig",
    "ItemBank",
    "MetricsSummary",
    "QuadratureGrid",
    "RaschDifficultyEstimator",
    "ResponseMatrix",
    "RunManifest",
    "SandwichCovariance",
    "ScenarioSpec",
    "SimulatedDataset",
    "bias_rmse",
    "build_gauss_hermite",
    "dpd_majorizer",
    "dpd_objective",
    "enumerate_patterns",
    "expect_over_theta",
    "fit",
    "fit_dpd",
    "fit_gamma",
    "fit_mmle",
    "gamma_majorizer",
    "gamma_objective",
    "generate",
    "icc",
    "influence_function",
    "influence_table",
    "inner_minimize",
    "load_responses",
    "log_pattern_prob_given_theta",
    "marginal_pattern_prob",
    "mean_psi",
    "mechanism_curve",
    "mmle_item_score",
    "mmle_objective",
    "model_power_integral",
    "pattern_prob_given_theta",
    "posterior_weights",
    "psi",
    "psi_jacobian",
    "run_study",
    "sandwich_covariance",
    "score_jacobian_sigma",
    "score_vector_xi",
    "true_difficulties",
    "write_responses",
]
