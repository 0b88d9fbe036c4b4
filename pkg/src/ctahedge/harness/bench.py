"""Per-round prediction timing for the factored forecaster."""

from __future__ import annotations

import time

import numpy as np

from ..context_stats import ContextStatsTable
from ..forecaster import _evaluate, make_prior
from ..processes import make_rng


def predict_time(depth: int, rounds: int = 200, repeats: int = 5, per_context: int = 8, seed: int = 0) -> float:
    """Seconds per prediction at a finite rate on a table warmed with random data.

    Warm-up feeds ``per_context * 2**depth`` rounds so tables of every depth
    are equally populated; numpy's ``logaddexp`` has a fast path for equal
    arguments, so a mostly empty table would time faster per slot.  Each repeat
    times ``rounds`` consecutive predictions and the fastest repeat is
    reported, which is far less sensitive to scheduler noise than the mean.
    """
    rng = make_rng(seed)
    warm = per_context << depth
    stats = ContextStatsTable(depth)
    for key, y in zip(rng.integers(0, 1 << depth, warm).tolist(), rng.integers(0, 2, warm).tolist()):
        stats.record(key, y)
    prior = make_prior("proportional", depth)
    keys = rng.integers(0, 1 << depth, rounds).tolist()
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for key in keys:
            _evaluate(stats, key, 0.5, prior)
        best = min(best, (time.perf_counter() - start) / rounds)
    return float(best)


def scaling_ratio(low: int = 10, high: int = 14, **kw) -> tuple[float, float, float]:
    """``(t_low, t_high, t_high / t_low)``."""
    t_low = predict_time(low, **kw)
    t_high = predict_time(high, **kw)
    return t_low, t_high, t_high / t_low
