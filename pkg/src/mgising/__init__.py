"""State-space multi-graph Ising models for sequences of binary patterns."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateColumnError, EmptyRasterError,
                     EnumerationLimitError, InvalidArgumentError, NumericError)
from .filtering import FilterConfig, FitTrace, NetworkState, filter_step, run_filter
from .learning import LearnerConfig, OnlineResult, column_correlation, match_columns, run_online
from .raster import BinaryRaster, bin_spike_times, select_top_units
from .selection import aic, fit_full_model, pca_baseline, sweep, window_loglik
