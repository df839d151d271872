"""Thresholded covariance estimation for weakly dependent time series."""

from lrcov.covariance import CovEstimate, sample_cov
from lrcov.errors import ConfigError, ConstructionError, LrcovError, NumericalError, ParseError
from lrcov.lrv import KernelSpec, lrv_matrix, lrv_pair
from lrcov.panel import TimeSeriesPanel, load_csv, write_csv
from lrcov.threshold import EstimatorSpec, ThresholdRule, apply_rule, estimate, threshold_matrix
from lrcov.tuning import BlockCvConfig, block_cv_delta, ordinary_cv_delta

__version__ = "0.1.0"

__all__ = [
    "BlockCvConfig",
    "ConfigError",
    "ConstructionError",
    "CovEstimate",
    "EstimatorSpec",
    "KernelSpec",
    "LrcovError",
    "NumericalError",
    "ParseError",
    "ThresholdRule",
    "TimeSeriesPanel",
    "apply_rule",
    "block_cv_delta",
    "estimate",
    "load_csv",
    "lrv_matrix",
    "lrv_pair",
    "ordinary_cv_delta",
    "sample_cov",
    "threshold_matrix",
    "write_csv",
]
