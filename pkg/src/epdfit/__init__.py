"""Robust parametric inference via exponential-polynomial divergences.

The package fits location-scale and rate models (and linear regressions)
by minimizing a three-parameter family of density-based divergences that
interpolates between maximum likelihood and heavily downweighted robust
estimators, selects the tuning triplet from the data, and reports
sandwich standard errors and influence diagnostics.
"""

__version__ = "0.1.0"

from .asymptotics import (
    GesResult, SandwichMatrices, asymptotic_summed_mse, general_jk, ges,
    influence, model_jkxi, sandwich_variance,
)
from .bregman import (
    DomainError, ParameterError, Triplet, b_prime, b_second, b_value, weight,
)
from .curves import emit_curve
from .datasets import BUNDLED, DatasetError, DatasetRecord, load_dataset
from .estimation import (
    EstimationError, FitResult, Sample, SolverConfig, estimating_residual,
    fit_mepde, fit_mle, objective_hn,
)
from .models import (
    EXPONENTIAL, MODELS, NORMAL, ExponentialMean, Model, NormalLocationScale,
    get_model,
)
from .quadrature import IntegrandDomain, QuadResult, integrate
from .regression import (
    RegressionError, RegressionFit, RegressionProblem, fit_regression_mepde,
    general_inh_matrices, ols_fit, psi_omega_matrices, tune_regression_wj,
)
from .tuning import TuneConfig, TuneResult, TuningError, tune_wj

__all__ = [
    "BUNDLED", "DatasetError", "DatasetRecord", "DomainError",
    "EstimationError", "EXPONENTIAL", "ExponentialMean", "FitResult",
    "GesResult", "IntegrandDomain", "MODELS", "Model", "NORMAL",
    "NormalLocationScale", "ParameterError", "QuadResult", "RegressionError",
    "RegressionFit", "RegressionProblem", "Sample", "SandwichMatrices",
    "SolverConfig", "Triplet", "TuneConfig", "TuneResult", "TuningError",
    "asymptotic_summed_mse", "b_prime", "b_second", "b_value", "emit_curve",
    "estimating_residual", "fit_mepde", "fit_mle", "fit_regression_mepde",
    "general_inh_matrices", "general_jk", "ges", "get_model", "influence",
    "integrate", "load_dataset", "model_jkxi", "objective_hn", "ols_fit",
    "psi_omega_matrices", "sandwich_variance", "tune_regression_wj",
    "tune_wj", "weight",
]
