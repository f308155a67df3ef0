"""Student-t regression with estimated degrees of freedom."""

from .estimators import (
    HuberConfig,
    estimate_nu,
    fit,
    fit_huber,
    fit_ols,
    fit_t_regression,
    jeffreys_map,
    two_stage_fit,
)
from .io import load_stackloss, read_dataset
from .likelihood import GAUSSIAN, Dataset, ModelParams, is_gaussian, log_likelihood
from .numeric import RngStream, solve_least_squares
from .optim import OptimControl, flatness_check
from .presets import preset, preset_names
from .profile import adjusted_profile_log_lik, profile_log_lik, pseudo_posterior_log
from .results import FitResult, NuEstimationResult, NuMethod
from .simulation import SimulationSpec, run_study

__version__ = "0.1.0"

__all__ = [
    "GAUSSIAN",
    "Dataset",
    "FitResult",
    "HuberConfig",
    "ModelParams",
    "NuEstimationResult",
    "NuMethod",
    "OptimControl",
    "RngStream",
    "SimulationSpec",
    "adjusted_profile_log_lik",
    "estimate_nu",
    "fit",
    "fit_huber",
    "fit_ols",
    "fit_t_regression",
    "flatness_check",
    "is_gaussian",
    "jeffreys_map",
    "load_stackloss",
    "log_likelihood",
    "preset",
    "preset_names",
    "profile_log_lik",
    "pseudo_posterior_log",
    "read_dataset",
    "run_study",
    "solve_least_squares",
    "two_stage_fit",
]
