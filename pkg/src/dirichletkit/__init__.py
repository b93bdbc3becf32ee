"""Dirichlet Type I and Type II models: estimation, posterior sampling, prediction and imputation."""

__version__ = "0.1.0"

from .conditional import (
    ConditionalSpec,
    PredictionRequest,
    conditional,
    predictive_conditional,
    sample_conditional,
    summarize_prediction,
)
from .datasets import load_iris
from .estimation import FitReport, FitSettings, fit_mode, method_of_moments, mle_fixed_point, posterior_mode
from .estimators import DirichletEstimator, DirichletImputer, Type2Transformer, estimate
from .exceptions import (
    AcceptanceRateWarning,
    CalibrationError,
    ConvergenceWarning,
    DomainError,
    EstimationError,
    IngestError,
    SmallParameterWarning,
)
from .imputation import IncompleteMatrix, multiple_impute, pool_estimates
from .mcmc import calibrate_proposal, log_posterior, mh_sample, posterior_mean, sample_posterior
from .model import (
    log_density_type1,
    log_density_type2,
    replicate_check,
    sample_dirichlet,
    sample_type2,
    to_type1,
    to_type2,
)
from .params import DirichletParams, SufficientStats, sufficient_stats
from .simstudy import StudyCell, rmspe, run_cell
from .special import RngStream

__all__ = [
    "AcceptanceRateWarning",
    "CalibrationError",
    "ConditionalSpec",
    "ConvergenceWarning",
    "DirichletEstimator",
    "DirichletImputer",
    "DirichletParams",
    "DomainError",
    "EstimationError",
    "FitReport",
    "FitSettings",
    "IncompleteMatrix",
    "IngestError",
    "PredictionRequest",
    "RngStream",
    "SmallParameterWarning",
    "StudyCell",
    "SufficientStats",
    "Type2Transformer",
    "calibrate_proposal",
    "conditional",
    "estimate",
    "fit_mode",
    "load_iris",
    "log_density_type1",
    "log_density_type2",
    "log_posterior",
    "method_of_moments",
    "mh_sample",
    "mle_fixed_point",
    "multiple_impute",
    "pool_estimates",
    "posterior_mean",
    "posterior_mode",
    "predictive_conditional",
    "replicate_check",
    "rmspe",
    "run_cell",
    "sample_conditional",
    "sample_dirichlet",
    "sample_posterior",
    "sample_type2",
    "sufficient_stats",
    "summarize_prediction",
    "to_type1",
    "to_type2",
]
