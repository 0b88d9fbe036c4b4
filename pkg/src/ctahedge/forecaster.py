"""ContextTreeAdaHedge(D): exponential weights over all binary tree experts.

The distribution over the ``2**(2**D)`` tree experts is never materialized.
For each suffix length ``h`` the forecaster keeps the product over contexts
of ``sum_y exp(-eta * L[x, y])`` (in log form, ``A_h``); the predictive
probability of symbol ``y`` is then a mixture over ``h`` of the current
context's weights, scaled by ``g(h) * exp(A_h) / (sum at the current context)``.

Everything is carried in natural-log form.  While the AdaHedge rate is still
infinite the same quantities are evaluated in a limit algebra: a weight is a
pair ``(a, log b)`` standing for ``b * exp(-eta * a)`` as ``eta -> inf``.
Products add both components; sums keep the smallest exponent and add the
coefficients of the tied terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import rate
from .context_stats import ContextLike, ContextStatsTable, check_symbol
from .errors import ConfigurationError, UsageError
from .rate import LN2, HedgeState

PRIOR_KINDS = ("uniform", "proportional", "custom")


@dataclass(frozen=True)
class PriorSpec:
    """Prior weight ``g(h)`` on each model order, stored as logs.

    The induced prior on a tree expert ``f`` is ``sum_{h >= order(f)} g(h) / Z``
    with ``Z = sum_h 2**(2**h) g(h)``.
    """

    depth: int
    log_g: tuple[float, ...]
    log_Z: float
    kind: str = "custom"

    @property
    def g(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_g))

    @property
    def log_g_array(self) -> np.ndarray:
        return self._log_g_array

    def __post_init__(self):
        arr = np.asarray(self.log_g, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "_log_g_array", arr)

    def supports(self, d: int) -> bool:
        return self.log_g[d] > -math.inf


def _log_normalizer(depth: int, log_g: np.ndarray) -> float:
    # log Z(g) = logsumexp_h (2^h ln 2 + log g(h))
    terms = (2.0 ** np.arange(depth + 1)) * LN2 + log_g
    return float(np.logaddexp.reduce(terms))


def make_prior(kind: str, depth: int, table: Sequence[float] | None = None) -> PriorSpec:
    """Build a prior over model orders ``0..depth``.

    ``uniform`` puts all mass on ``h = depth`` (plain exponential weights over
    ``F_D``); ``proportional`` uses ``g(h) = 2**-(2**(h+1))``; ``custom`` takes
    ``table``, a list of ``depth + 1`` nonnegative weights.
    """
    if depth < 0:
        raise ConfigurationError(f"depth must be nonnegative, got {depth}")
    if kind in ("prop", "proportional"):
        kind = "proportional"
        log_g = -(2.0 ** (np.arange(depth + 1) + 1)) * LN2
    elif kind == "uniform":
        log_g = np.full(depth + 1, -np.inf)
        log_g[depth] = 0.0
    elif kind == "custom":
        if table is None or len(table) != depth + 1:
            raise ConfigurationError(f"custom prior needs {depth + 1} weights")
        g = np.asarray(table, dtype=float)
        if np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ConfigurationError(f"prior weights must be finite and nonnegative: {list(table)}")
        if not np.any(g > 0):
            raise ConfigurationError("prior weights are all zero")
        with np.errstate(divide="ignore"):
            log_g = np.log(g)
    else:
        raise ConfigurationError(f"unknown prior kind {kind!r}; expected one of {PRIOR_KINDS}")
    return PriorSpec(depth, tuple(float(x) for x in log_g), _log_normalizer(depth, log_g), kind)


class Prediction(NamedTuple):
    """Distribution ``(w0, w1)`` over the next symbol."""

    w0: float
    w1: float

    @classmethod
    def from_logs(cls, l0: float, l1: float) -> "Prediction":
        if l0 == -math.inf and l1 == -math.inf:
            raise UsageError("both symbols carry zero weight")
        d = l1 - l0
        if d >= 0:
            e = math.exp(-d)
            return cls(e / (1.0 + e), 1.0 / (1.0 + e))
        e = math.exp(d)
        return cls(1.0 / (1.0 + e), e / (1.0 + e))


class ModelPosterior:
    """Posterior weight ``q(h)`` the forecaster puts on order-``h`` structure."""

    __slots__ = ("q",)

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float)

    def __getitem__(self, h):
        return self.q[h]

    def __len__(self):
        return len(self.q)

    def __iter__(self):
        return iter(self.q)

    def __repr__(self):
        return f"ModelPosterior({np.array2string(self.q, precision=4)})"

    @property
    def mode(self) -> int:
        return int(np.argmax(self.q))


class LimitWeights(NamedTuple):
    """Per-order weights in the ``eta -> inf`` algebra: ``exp(log_coef) * e^{-eta * exponent}``."""

    exponent: np.ndarray
    log_coef: np.ndarray


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not eta > 0:
        raise UsageError(f"learning rate must be positive or inf, got {eta}")
    return eta


def _check_prior(stats: ContextStatsTable, prior: PriorSpec) -> None:
    if prior.depth != stats.depth:
        raise UsageError(f"prior depth {prior.depth} does not match table depth {stats.depth}")


def _normalize_logs(log_w: np.ndarray) -> np.ndarray:
    total = np.logaddexp.reduce(log_w)
    q = np.exp(log_w - total)
    return q / q.sum()


def _limit_mass(exponent: np.ndarray, log_coef: np.ndarray) -> np.ndarray:
    """Normalized limit of ``sum_i b_i e^{-eta a_i}`` shares: mass split over the argmin."""
    valid = log_coef > -np.inf
    best = exponent[valid].min()
    keep = valid & (exponent == best)
    log_w = np.where(keep, log_coef, -np.inf)
    return _normalize_logs(log_w)


class _Evaluation(NamedTuple):
    prediction: Prediction
    log_q: np.ndarray | LimitWeights  # unnormalized log Q_t(h), or its limit form


def _evaluate(stats: ContextStatsTable, key: int, eta: float, prior: PriorSpec) -> _Evaluation:
    counts = stats.counts
    offsets = stats.offsets
    idx = stats.slots(key)
    log_g = prior.log_g_array
    if math.isinf(eta):
        mins = counts.min(axis=1)
        ties = counts[:, 0] == counts[:, 1]
        a_exp = np.add.reduceat(mins, offsets)
        a_log = np.add.reduceat(ties, offsets) * LN2
        cur = counts[idx]
        # per (h, y): g(h) * prod_{x != current} (...) * e^{-eta L[current, y]}
        expo = (a_exp - mins[idx])[:, None] + cur
        coef = (log_g + a_log - LN2 * ties[idx])[:, None] + np.zeros((1, 2))
        valid = np.isfinite(coef)
        best = expo[valid].min()
        keep = valid & (expo == best)
        masked = np.where(keep, coef, -np.inf)
        l0, l1 = np.logaddexp.reduce(masked, axis=0)
        return _Evaluation(Prediction.from_logs(l0, l1), LimitWeights(a_exp.astype(float), log_g + a_log))
    neg = counts * (-eta)
    lse = np.logaddexp(neg[:, 0], neg[:, 1])
    log_q = log_g + np.add.reduceat(lse, offsets)
    score = (log_q - lse[idx])[:, None] + neg[idx]
    l0, l1 = np.logaddexp.reduce(score, axis=0)
    return _Evaluation(Prediction.from_logs(l0, l1), log_q)


def predict(stats: ContextStatsTable, context: ContextLike, eta: float, prior: PriorSpec) -> Prediction:
    """Predictive distribution for the next symbol given all recorded rounds."""
    _check_prior(stats, prior)
    return _evaluate(stats, stats.key_of(context), _check_eta(eta), prior).prediction


def log_model_weights(stats: ContextStatsTable, eta: float, prior: PriorSpec) -> np.ndarray | LimitWeights:
    """Unnormalized ``log Q(h) = log g(h) + sum_x log sum_y exp(-eta L[x, y])``."""
    _check_prior(stats, prior)
    return _evaluate(stats, 0, _check_eta(eta), prior).log_q


def posterior_from_log_weights(log_q: np.ndarray | LimitWeights) -> ModelPosterior:
    if isinstance(log_q, LimitWeights):
        return ModelPosterior(_limit_mass(log_q.exponent, log_q.log_coef))
    return ModelPosterior(_normalize_logs(log_q))


def model_posterior(stats: ContextStatsTable, eta: float, prior: PriorSpec) -> ModelPosterior:
    return posterior_from_log_weights(log_model_weights(stats, eta, prior))


@dataclass(frozen=True)
class RoundDiagnostics:
    """What one forecasting round produced, before it is folded into a trace."""

    t: int
    prediction: Prediction
    outcome: int
    eta: float
    expected_loss: float
    mix_loss: float
    variance: float
    delta: float
    posterior: ModelPosterior
    log_q: np.ndarray | LimitWeights
    best_losses: np.ndarray  # hindsight losses per order before this round


def step(stats: ContextStatsTable, hedge: HedgeState, prior: PriorSpec,
         context: ContextLike, outcome: int) -> tuple[Prediction, RoundDiagnostics, ContextStatsTable, HedgeState]:
    """Play one round: predict with ``eta_t = ln 2 / Delta_{t-1}``, then record the outcome.

    ``stats`` is updated in place and returned for convenience.
    """
    _check_prior(stats, prior)
    outcome = check_symbol(outcome)
    key = stats.key_of(context)
    eta = hedge.eta_current
    ev = _evaluate(stats, key, eta, prior)
    best = stats.best_order_losses()
    h, m, v = rate.round_losses(ev.prediction, outcome, eta)
    hedge = rate.advance(hedge, h, m, v)
    stats.record(key, outcome)
    diag = RoundDiagnostics(
        t=hedge.round, prediction=ev.prediction, outcome=outcome, eta=eta,
        expected_loss=h, mix_loss=m, variance=v, delta=rate.mixability_gap(h, m),
        posterior=posterior_from_log_weights(ev.log_q), log_q=ev.log_q, best_losses=best,
    )
    return ev.prediction, diag, stats, hedge


def per_round_cost(depth: int) -> dict[str, int]:
    """Context slots touched per round: every slot of every level to predict, one per level to record."""
    return {"predict_slots": (1 << (depth + 1)) - 1, "record_slots": depth + 1}


class ContextTreeAdaHedge:
    """Stateful wrapper bundling a table, AdaHedge state and a prior.

    >>> alg = ContextTreeAdaHedge(2, "proportional")
    >>> alg.predict((0, 1))
    Prediction(w0=0.5, w1=0.5)
    """

    def __init__(self, depth: int, prior: PriorSpec | str = "proportional"):
        self.stats = ContextStatsTable(depth)
        self.prior = prior if isinstance(prior, PriorSpec) else make_prior(prior, depth)
        self.hedge = rate.fresh()

    @property
    def eta(self) -> float:
        return self.hedge.eta_current

    def predict(self, context: ContextLike) -> Prediction:
        return predict(self.stats, context, self.hedge.eta_current, self.prior)

    def posterior(self) -> ModelPosterior:
        return model_posterior(self.stats, self.hedge.eta_current, self.prior)

    def update(self, context: ContextLike, outcome: int) -> RoundDiagnostics:
        _, diag, self.stats, self.hedge = step(self.stats, self.hedge, self.prior, context, outcome)
        return diag
