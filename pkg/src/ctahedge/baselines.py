"""Comparison forecasters: Follow-the-Context-Leader and fixed-rate tree experts."""

from __future__ import annotations

import math

from . import forecaster
from .context_stats import ContextLike, ContextStatsTable
from .errors import UsageError
from .forecaster import PriorSpec, Prediction

DEFAULT_FIXED_ETA = 1.0
TIE_RULES = ("split", "zero")

_HALF = Prediction(0.5, 0.5)


def ftl_predict(stats: ContextStatsTable, context: ContextLike, h: int, ties: str = "split") -> Prediction:
    """Put all mass on the symbol with the smaller loss at the current ``h``-context.

    Ties (including unseen contexts) give ``(0.5, 0.5)`` under ``ties="split"``
    and predict 0 under ``ties="zero"``.
    """
    if not 0 <= h <= stats.depth:
        raise UsageError(f"FTL order {h} outside 0..{stats.depth}")
    if ties not in TIE_RULES:
        raise UsageError(f"unknown tie rule {ties!r}")
    key = stats.key_of(context)
    loss0, loss1 = stats.counts[(1 << h) - 1 + (key & ((1 << h) - 1))]
    if loss0 < loss1:
        return Prediction(1.0, 0.0)
    if loss1 < loss0:
        return Prediction(0.0, 1.0)
    return _HALF if ties == "split" else Prediction(1.0, 0.0)


def fixed_eta_predict(stats: ContextStatsTable, context: ContextLike, eta: float, prior: PriorSpec) -> Prediction:
    """The tree-expert forecaster at a constant learning rate."""
    if not (eta > 0 and math.isfinite(eta)):
        raise UsageError(f"fixed learning rate must be finite and positive, got {eta}")
    return forecaster.predict(stats, context, eta, prior)
