"""AdaHedge learning-rate recursion and the running sums used by the bound checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NumericalConsistencyError, UsageError

LN2 = math.log(2.0)
EPS_NUM = 1e-12


@dataclass(frozen=True)
class HedgeState:
    """Accumulators after ``round`` completed rounds.

    ``eta_current`` is the rate for the *next* round, ``ln 2 / delta_cum``,
    and is ``inf`` while no mixability gap has been observed.
    """

    round: int = 0
    delta_cum: float = 0.0
    expected_loss_cum: float = 0.0
    mix_loss_cum: float = 0.0
    variance_cum: float = 0.0
    eta_current: float = math.inf


def fresh() -> HedgeState:
    return HedgeState()


def eta_from_gap(delta_cum: float) -> float:
    return LN2 / delta_cum if delta_cum > 0 else math.inf


def round_losses(w, outcome: int, eta: float) -> tuple[float, float, float]:
    """Expected loss, mix loss and loss variance of distribution ``w`` on ``outcome``.

    The mix loss is ``-(1/eta) ln <w, exp(-eta * l)>``, which lies between 0
    and the expected loss, so the gap ``h - m`` is in ``[0, 1]``.  ``w`` is any
    pair ``(w0, w1)`` summing to one.  At ``eta = inf`` the limit is returned:
    0 if the outcome carries mass, else 1.
    """
    w0, w1 = float(w[0]), float(w[1])
    if abs(w0 + w1 - 1.0) > 1e-9 or w0 < 0 or w1 < 0:
        raise UsageError(f"prediction ({w0}, {w1}) is not a distribution")
    if not eta > 0:
        raise UsageError(f"learning rate must be positive, got {eta}")
    w_right, w_wrong = (w0, w1) if outcome == 0 else (w1, w0)
    h = w_wrong
    v = w_wrong * (1.0 - w_wrong)
    if w_wrong == 0.0:
        return 0.0, 0.0, 0.0
    if w_right == 0.0:
        return h, 1.0, v
    if math.isinf(eta):
        return h, 0.0, v
    if eta < 1.0:
        # ln(1 - w_wrong (1 - e^-eta)), accurate when eta is small
        m = -math.log1p(-w_wrong * -math.expm1(-eta)) / eta
    else:
        a, b = math.log(w_right), math.log(w_wrong) - eta
        hi = max(a, b)
        m = -(hi + math.log1p(math.exp(min(a, b) - hi))) / eta
    return h, max(m, 0.0), v  # w_right may round to 1, leaving m a hair below 0


def advance(state: HedgeState, h: float, m: float, v: float) -> HedgeState:
    """Fold one round into the accumulators and refresh the learning rate."""
    delta = h - m
    if delta < -EPS_NUM:
        raise NumericalConsistencyError(
            f"negative mixability gap {delta:.3e} at round {state.round + 1}")
    delta = min(max(delta, 0.0), 1.0)
    delta_cum = state.delta_cum + delta
    return replace(
        state,
        round=state.round + 1,
        delta_cum=delta_cum,
        expected_loss_cum=state.expected_loss_cum + h,
        mix_loss_cum=state.mix_loss_cum + m,
        variance_cum=state.variance_cum + v,
        eta_current=eta_from_gap(delta_cum),
    )


def mixability_gap(h: float, m: float) -> float:
    return min(max(h - m, 0.0), 1.0)


def delta_variance_bound(variance_cum: float) -> float:
    """Upper bound on the cumulative mixability gap in terms of the loss variance."""
    return math.sqrt(variance_cum * LN2) + (2.0 / 3.0) * LN2 + 1.0
