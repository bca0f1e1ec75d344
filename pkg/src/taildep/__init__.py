"""Nonparametric tail dependence estimation with MSE-optimal threshold selection."""

from .copulas import (
    Clayton,
    Copula,
    DomainError,
    Gaussian,
    Gumbel,
    StudentT,
    Survival,
    TailDepError,
    UnsupportedFamilyError,
    h_pair,
    make_copula,
)
from .empirical import (
    PseudoSample,
    empirical_copula,
    extreme_set,
    joint_orthant_prob,
    lambda_average,
    lambda_lower,
    lambda_series,
    lambda_upper,
    pseudo_sample,
)
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    MethodStats,
    bootstrap_se,
    emit_table,
    read_table_json,
    rmse,
    run_experiment,
    table_rows,
)
from .mse import (
    MseDecomposition,
    covariance_kernel,
    mse_average,
    mse_lower,
    mse_lower_clayton,
    mse_upper,
    mse_upper_gumbel,
    threshold_correlation,
    variance_kernel,
)
from .selection import (
    DegenerateLikelihoodError,
    METHODS,
    SelectionResult,
    ThresholdRangeError,
    calibrate_theta,
    censored_loglik,
    estimate_method,
    optimal_threshold,
    optimal_threshold_inverse,
    plateau_estimate,
    plateau_params,
    pseudo_mle,
    select_average_joint,
    select_average_minavg,
    select_simple_plugin,
    select_two_step,
)

__version__ = "0.1.0"
