"""Brute-force exponential weights over every tree expert in ``F_D``.

Only meant for small depths: it enumerates all ``2**(2**D)`` truth tables and
serves as an independent reference for the forecaster's factored update.
Expert ``f`` is the integer whose bit ``x`` is its output on full context key ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import forecaster, rate
from .context_stats import ContextStatsTable, ContextWindow, check_symbol
from .errors import ConfigurationError
from .forecaster import PriorSpec, Prediction

MAX_ORACLE_DEPTH = 4


@dataclass(frozen=True)
class TreeExpert:
    depth: int
    truth_table: tuple[int, ...]

    def __post_init__(self):
        if len(self.truth_table) != 1 << self.depth:
            raise ConfigurationError(f"truth table must have {1 << self.depth} entries")

    @classmethod
    def from_index(cls, index: int, depth: int) -> "TreeExpert":
        return cls(depth, tuple((index >> x) & 1 for x in range(1 << depth)))

    def __call__(self, context) -> int:
        key = context.key if isinstance(context, ContextWindow) else int(context)
        return self.truth_table[key]


def order_of(expert: TreeExpert) -> int:
    """Smallest ``d`` such that the output only depends on the ``d`` most recent bits."""
    table = expert.truth_table
    for d in range(expert.depth + 1):
        mask = (1 << d) - 1
        if all(table[x] == table[x & mask] for x in range(len(table))):
            return d
    return expert.depth  # unreachable: d = depth always collapses


def _orders(outputs: np.ndarray, depth: int) -> np.ndarray:
    n_ctx = 1 << depth
    order = np.full(outputs.shape[0], depth, dtype=np.int64)
    for d in range(depth - 1, -1, -1):
        proj = outputs[:, np.arange(n_ctx) & ((1 << d) - 1)]
        collapses = np.all(outputs == proj, axis=1)
        order[collapses] = d
    return order


class NaiveEnsemble:
    """All tree experts of depth ``D`` with their prior weights and cumulative losses."""

    def __init__(self, depth: int, prior: PriorSpec):
        if not 0 <= depth <= MAX_ORACLE_DEPTH:
            raise ConfigurationError(f"naive oracle supports depth 0..{MAX_ORACLE_DEPTH}, got {depth}")
        if prior.depth != depth:
            raise ConfigurationError("prior depth does not match oracle depth")
        self.depth = depth
        n_experts = 1 << (1 << depth)
        index = np.arange(n_experts, dtype=np.int64)
        self.outputs = ((index[:, None] >> np.arange(1 << depth)) & 1).astype(np.int8)
        self.orders = _orders(self.outputs, depth)
        g = prior.g
        tail = np.cumsum(g[::-1])[::-1]  # sum_{h >= d} g(h)
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(tail[self.orders]) - prior.log_Z
        self.cum_loss = np.zeros(n_experts, dtype=np.int64)

    @property
    def n_experts(self) -> int:
        return self.outputs.shape[0]

    def expert(self, index: int) -> TreeExpert:
        return TreeExpert.from_index(index, self.depth)

    def tree_weights(self, eta: float) -> np.ndarray:
        """Normalized distribution over all experts at learning rate ``eta``."""
        if math.isinf(eta):
            valid = self.log_prior > -np.inf
            best = self.cum_loss[valid].min()
            log_w = np.where(valid & (self.cum_loss == best), self.log_prior, -np.inf)
        else:
            log_w = self.log_prior - eta * self.cum_loss
        w = np.exp(log_w - np.logaddexp.reduce(log_w))
        return w / w.sum()

    def _key(self, context) -> int:
        if isinstance(context, (int, np.integer)):
            return int(context)
        if not isinstance(context, ContextWindow):
            context = ContextWindow.of(context)
        if context.depth != self.depth:
            raise ConfigurationError(f"context depth {context.depth} does not match {self.depth}")
        return context.key


def naive_predict(ensemble: NaiveEnsemble, context, eta: float) -> Prediction:
    w = ensemble.tree_weights(float(eta))
    out = ensemble.outputs[:, ensemble._key(context)]
    w1 = float(w[out == 1].sum())
    w0 = float(w[out == 0].sum())
    s = w0 + w1
    return Prediction(w0 / s, w1 / s)


def naive_record(ensemble: NaiveEnsemble, context, outcome: int) -> None:
    outcome = check_symbol(outcome)
    ensemble.cum_loss += ensemble.outputs[:, ensemble._key(context)] != outcome


def random_sequence(depth: int, horizon: int, seed: int) -> list[tuple[int, int]]:
    """Fair random (context key, outcome) pairs for equivalence checks."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 2]))
    keys = rng.integers(0, 1 << depth, size=horizon)
    outcomes = rng.integers(0, 2, size=horizon)
    return [(int(k), int(y)) for k, y in zip(keys, outcomes)]


def equivalence_check(depth: int, prior: PriorSpec | str, horizon: int = 50, seed: int = 0,
                      sequence: list[tuple[int, int]] | None = None) -> float:
    """Largest per-round sup-norm gap between the factored and the brute-force predictions.

    Both paths see the same data and the same rate trajectory, taken from the
    factored forecaster's AdaHedge state.
    """
    if not 0 <= depth <= 3:
        raise ConfigurationError(f"equivalence check supports depth 0..3, got {depth}")
    if not 1 <= horizon <= 200:
        raise ConfigurationError(f"horizon must be in 1..200, got {horizon}")
    if isinstance(prior, str):
        prior = forecaster.make_prior(prior, depth)
    if sequence is None:
        sequence = random_sequence(depth, horizon, seed)
    stats = ContextStatsTable(depth)
    hedge = rate.fresh()
    ensemble = NaiveEnsemble(depth, prior)
    worst = 0.0
    for key, outcome in sequence[:horizon]:
        eta = hedge.eta_current
        w_naive = naive_predict(ensemble, key, eta)
        w_fast, _, stats, hedge = forecaster.step(stats, hedge, prior, key, outcome)
        worst = max(worst, abs(w_fast.w0 - w_naive.w0), abs(w_fast.w1 - w_naive.w1))
        naive_record(ensemble, key, outcome)
    return worst
