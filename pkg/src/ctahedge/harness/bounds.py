"""Deterministic inequalities every completed run must satisfy, evaluated round by round."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..forecaster import LimitWeights, PriorSpec
from ..rate import EPS_NUM, LN2

BOUND_CONST = (2.0 / 3.0) * LN2 + 1.0
SLACK_PER_ROUND = 1e-6


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    margin: float  # smallest (bound - measured) over all checked rounds
    worst_round: int  # round attaining the margin, or first violation
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        where = f"first violation at round {self.worst_round}" if not self.passed else f"tightest at round {self.worst_round}"
        return f"{status} {self.name}: margin {self.margin:.6g} ({where}){' ' + self.detail if self.detail else ''}"


def second_order_factor(prior: PriorSpec, d: int) -> float:
    """``1 + ln(Z(g) / g(d)) / ln 2``; only defined when ``g(d) > 0``."""
    return 1.0 + (prior.log_Z - prior.log_g[d]) / LN2


def second_order_rhs(variance_cum, prior: PriorSpec, d: int):
    return (np.sqrt(np.asarray(variance_cum) * LN2) + BOUND_CONST) * second_order_factor(prior, d)


def delta_variance_rhs(variance_cum):
    return np.sqrt(np.asarray(variance_cum) * LN2) + BOUND_CONST


def worst_case_rhs(t, d: int):
    """Closed form of the second-order bound for the proportional prior with ``V_t <= t/4``."""
    return (0.5 * np.sqrt(np.asarray(t, dtype=float) * LN2) + BOUND_CONST) * (2.0 + 2.0 ** (d + 1))


def sandwich_margins(log_q, eta: float, best_losses: np.ndarray, log_g: np.ndarray) -> tuple[float, float]:
    """Smallest slack in ``log g - eta B_h <= log Q(h) <= log g - eta B_h + 2^h ln 2``.

    ``B_h`` is the hindsight loss of the best order-``h`` expert on the data the
    weights were computed from.  Orders with ``g(h) = 0`` are skipped.  With the
    limit weights of an infinite rate, any order with ``B_h > 0`` has both
    bounds and ``Q`` at ``-inf`` and is trivially satisfied.
    """
    support = log_g > -np.inf
    h = np.arange(len(log_g))
    width = (2.0 ** h) * LN2
    if isinstance(log_q, LimitWeights):
        support = support & (best_losses == 0)
        if not support.any():
            return math.inf, math.inf
        lq = log_q.log_coef[support]
        base = log_g[support]
    else:
        lq = log_q[support]
        base = log_g[support] - eta * best_losses[support]
    lower = float(np.min(lq - base))
    upper = float(np.min(base + width[support] - lq))
    return lower, upper


def _verdict(name: str, margins: np.ndarray, rounds: np.ndarray, slack: np.ndarray, detail: str = "") -> Verdict:
    ok = margins >= -slack
    if ok.all():
        i = int(np.argmin(margins))
        return Verdict(name, True, float(margins[i]), int(rounds[i]), detail)
    i = int(np.argmax(~ok))
    return Verdict(name, False, float(margins[i]), int(rounds[i]), detail)


def bound_report(trace, prior: PriorSpec, algorithm: str = "ctah") -> list[Verdict]:
    """Evaluate all applicable inequalities at every logged round.

    The AdaHedge-specific bounds only apply to ``algorithm == "ctah"``; the
    log-Q sandwich applies to any run that used the tree-expert kernel.
    Each check allows ``1e-6 * t`` slack at round ``t``.
    """
    t = trace.t
    slack = SLACK_PER_ROUND * t
    out = [invariants_verdict(trace)]
    if algorithm in ("ctah", "fixed_eta"):
        margins = np.minimum(trace.sandwich_lower, trace.sandwich_upper)
        out.append(_verdict("log-Q sandwich", margins, t, slack,
                            "(proportional-prior form)" if prior.kind == "proportional" else "(general-prior form)"))
    if algorithm != "ctah":
        return out
    out.append(_verdict("delta-variance", delta_variance_rhs(trace.V) - trace.Delta, t, slack))
    regret = trace.expected_regret
    for d in range(prior.depth + 1):
        if not prior.supports(d):
            continue
        rhs = second_order_rhs(trace.V, prior, d)
        out.append(_verdict(f"second-order bound d={d}", rhs - regret[:, d], t, slack))
    if prior.kind == "proportional":
        for d in range(prior.depth + 1):
            out.append(_verdict(f"worst-case rate d={d}", worst_case_rhs(t, d) - regret[:, d], t, slack))
    return out


def invariants_verdict(trace) -> Verdict:
    """Per-round bookkeeping: normalization, gap range, rate monotonicity, H - M = Delta."""
    t = trace.t
    problems = []
    w_err = np.abs(trace.w0 + trace.w1 - 1.0)
    q_err = np.abs(trace.q.sum(axis=1) - 1.0)
    delta = trace.delta_raw
    eta = trace.eta
    ident = np.abs(trace.H_expected - trace.M - trace.Delta) - 1e-9 * t
    bad = np.zeros(len(t), dtype=bool)
    checks = [
        (w_err > 1e-12, "prediction not normalized"),
        (q_err > 1e-12, "posterior not normalized"),
        ((delta < -EPS_NUM) | (delta > 1.0 + EPS_NUM), "mixability gap outside [0, 1]"),
        (np.concatenate([[False], eta[1:] > eta[:-1]]), "learning rate increased"),
        (ident > 0, "H - M != Delta"),
    ]
    for mask, what in checks:
        if mask.any():
            problems.append(f"{what} (round {int(t[np.argmax(mask)])})")
            bad |= mask
    if problems:
        return Verdict("per-round invariants", False, -1.0, int(t[np.argmax(bad)]), "; ".join(problems))
    return Verdict("per-round invariants", True, 0.0, int(t[-1]))
