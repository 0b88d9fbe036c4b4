"""Adaptive online prediction over binary context-tree experts."""

from .context_stats import ContextStatsTable, ContextWindow, LossCounts, new_table
from .errors import (
    ConfigurationError,
    CtahError,
    EmptyDataError,
    NumericalConsistencyError,
    UsageError,
)
from .forecaster import (
    ContextTreeAdaHedge,
    ModelPosterior,
    Prediction,
    PriorSpec,
    make_prior,
    model_posterior,
    predict,
    step,
)
from .rate import HedgeState

__version__ = "0.1.0"
