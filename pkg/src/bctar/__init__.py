"""Exact Bayesian inference for context-tree mixtures of autoregressive models."""

__version__ = "0.1.0"

from .ar_engine import (
    ARHyper,
    ARPosterior,
    SuffStats,
    log_pe,
    log_pe_known_var,
    map_params,
    posterior,
    predict_mean,
    regressor,
    stats_update,
)
from .context_tree import ContextTree, build_tmax, context_of, enumerate_trees, log_prior, tree_to_dict
from .errors import (
    BCTError,
    CapacityError,
    ConfigurationError,
    InputError,
    NumericalError,
    StructuralError,
    TuningError,
)
from .forecast import ForecastReport, mse, rolling_forecast
from .inference import (
    BCTConfig,
    InferenceState,
    MapResult,
    brute_force_evidence,
    cbct,
    cctw,
    kbct,
    tree_log_posterior,
    update,
)
from .quantiser import Quantiser, quantize, quantize_series, threshold_grid
from .simulate import THREE_LEAF_MODEL, BCTARModel, LeafParams, simulate_bct_ar
from .tuning import TuneResult, select_hyper

__all__ = [
    "ARHyper",
    "ARPosterior",
    "SuffStats",
    "log_pe",
    "log_pe_known_var",
    "map_params",
    "posterior",
    "predict_mean",
    "regressor",
    "stats_update",
    "ContextTree",
    "build_tmax",
    "context_of",
    "enumerate_trees",
    "log_prior",
    "tree_to_dict",
    "BCTError",
    "CapacityError",
    "ConfigurationError",
    "InputError",
    "NumericalError",
    "StructuralError",
    "TuningError",
    "ForecastReport",
    "mse",
    "rolling_forecast",
    "BCTConfig",
    "InferenceState",
    "MapResult",
    "brute_force_evidence",
    "cbct",
    "cctw",
    "kbct",
    "tree_log_posterior",
    "update",
    "Quantiser",
    "quantize",
    "quantize_series",
    "threshold_grid",
    "THREE_LEAF_MODEL",
    "BCTARModel",
    "LeafParams",
    "simulate_bct_ar",
    "TuneResult",
    "select_hyper",
]
