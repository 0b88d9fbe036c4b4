"""Data sources: d-th order stochastic processes, sequence files and an adaptive adversary.

Covariates form an exogenous i.i.d. bit stream ``U``; round ``t`` sees the
window ``(U_{t-D}, ..., U_{t-1})`` with the most recent bit last.  ``D``
warm-up bits are drawn first so the first window is full.  Randomness comes
from numpy's Philox4x64-10 counter-based generator keyed by ``(seed, 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .context_stats import MAX_DEPTH, ContextWindow
from .errors import ConfigurationError, UsageError

RNG_ID = "numpy.random.Philox (philox4x64-10), key=(seed, stream)"
DATA_STREAM = 0
PREDICTION_STREAM = 1


def make_rng(seed: int, stream: int = DATA_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), int(stream)]))


@dataclass(frozen=True)
class StochasticSpec:
    """``P(Y=1 | d most recent covariates)`` for a d-th order stochastic source.

    ``cond_table`` is indexed by the packed ``d``-bit suffix key (bit 0 most recent).
    """

    depth: int
    true_order: int
    cond_table: tuple[float, ...]
    covariate_bias: float = 0.5
    name: str = "custom"

    def __post_init__(self):
        if not 0 <= self.true_order <= self.depth <= MAX_DEPTH:
            raise ConfigurationError(
                f"need 0 <= true_order <= depth <= {MAX_DEPTH}, got {self.true_order}, {self.depth}")
        if len(self.cond_table) != 1 << self.true_order:
            raise ConfigurationError(f"conditional table needs {1 << self.true_order} entries")
        if any(not 0.0 <= p <= 1.0 for p in self.cond_table):
            raise ConfigurationError("conditional probabilities must lie in [0, 1]")
        if not 0.0 <= self.covariate_bias <= 1.0:
            raise ConfigurationError("covariate bias must lie in [0, 1]")

    def check_margin(self) -> None:
        """Raise unless the best predictor is unique at every context."""
        if any(p == 0.5 for p in self.cond_table):
            raise ConfigurationError("a context has P(Y=1|x) = 1/2; best predictor not unique")


def xor3_spec(depth: int = 8) -> StochasticSpec:
    """``Y ~ Ber(0.6 * (x1 xor x2 xor x3) + 0.2)`` over the three most recent bits."""
    if depth < 3:
        raise ConfigurationError(f"xor3 needs depth >= 3, got {depth}")
    table = tuple(0.6 * (bin(k).count("1") & 1) + 0.2 for k in range(8))
    return StochasticSpec(depth, 3, table, name="xor3")


def iid07_spec(depth: int = 8) -> StochasticSpec:
    if depth < 0:
        raise ConfigurationError(f"depth must be nonnegative, got {depth}")
    return StochasticSpec(depth, 0, (0.7,), name="iid07")


@dataclass(frozen=True)
class DataStream:
    """A realized data stream: packed full-context keys and outcomes."""

    depth: int
    keys: np.ndarray
    outcomes: np.ndarray

    def __len__(self):
        return len(self.outcomes)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return zip(self.keys.tolist(), self.outcomes.tolist())

    def windows(self) -> Iterator[tuple[ContextWindow, int]]:
        for key, y in self:
            yield ContextWindow.from_key(key, self.depth), y

    def restrict(self, h: int) -> "DataStream":
        """The same stream seen through an ``h``-bit window."""
        if not 0 <= h <= self.depth:
            raise UsageError(f"cannot restrict depth {self.depth} stream to {h} bits")
        return DataStream(h, self.keys & ((1 << h) - 1), self.outcomes)


def _window_keys(u: np.ndarray, depth: int, horizon: int) -> np.ndarray:
    keys = np.zeros(horizon, dtype=np.int64)
    # bit i of key at round t is U_{t-1-i}; u[depth + t - 1] is the newest bit seen in round t
    for i in range(depth):
        keys |= u[depth - 1 - i: depth - 1 - i + horizon].astype(np.int64) << i
    return keys


def generate_stochastic(spec: StochasticSpec, horizon: int, seed: int) -> DataStream:
    if horizon < 1:
        raise ConfigurationError(f"horizon must be positive, got {horizon}")
    rng = make_rng(seed)
    u = rng.random(horizon + spec.depth) < spec.covariate_bias
    keys = _window_keys(u, spec.depth, horizon)
    p1 = np.asarray(spec.cond_table)[keys & ((1 << spec.true_order) - 1)]
    outcomes = (rng.random(horizon) < p1).astype(np.int64)
    return DataStream(spec.depth, keys, outcomes)


def covariate_keys(depth: int, horizon: int, seed: int, bias: float = 0.5) -> np.ndarray:
    """Context keys from the exogenous covariate stream alone (used by the adversary)."""
    rng = make_rng(seed)
    u = rng.random(horizon + depth) < bias
    return _window_keys(u, depth, horizon)


@dataclass(frozen=True)
class ProcessAnalytics:
    pi_star: tuple[float, ...]
    beta_star: float
    alpha: dict[tuple[int, int], float] = field(default_factory=dict)
    f_star: tuple[int, ...] = ()

    def regret_gap(self, h: int, d: int) -> float:
        return self.alpha[(h, d)]


def _suffix_marginals(spec: StochasticSpec, h: int) -> tuple[np.ndarray, np.ndarray]:
    """``(Q_h(x), P(Y=1 | x(h)))`` for every ``h``-bit suffix, ``h <= true_order``."""
    d = spec.true_order
    keys = np.arange(1 << d)
    ones = np.array([bin(k).count("1") for k in keys])
    q = spec.covariate_bias ** ones * (1 - spec.covariate_bias) ** (d - ones)
    p = np.asarray(spec.cond_table)
    qh = np.zeros(1 << h)
    joint = np.zeros(1 << h)
    np.add.at(qh, keys & ((1 << h) - 1), q)
    np.add.at(joint, keys & ((1 << h) - 1), q * p)
    with np.errstate(invalid="ignore", divide="ignore"):
        ph = np.where(qh > 0, joint / np.where(qh > 0, qh, 1), 0.5)
    return qh, ph


def analytics(spec: StochasticSpec) -> ProcessAnalytics:
    """Exact unpredictabilities, margin and best predictor by marginalizing the source."""
    d = spec.true_order
    pi = []
    for h in range(d + 1):
        qh, ph = _suffix_marginals(spec, h)
        pi.append(float(np.sum(qh * (1.0 - np.maximum(ph, 1.0 - ph)))))
    pi += [pi[d]] * (spec.depth - d)
    p = np.asarray(spec.cond_table)
    beta = float(np.min(np.maximum(p, 1.0 - p)))
    f_star = tuple(int(x) for x in (p > 0.5))
    alpha = {(h, dd): (pi[h] - pi[dd]) / 2.0
             for dd in range(spec.depth + 1) for h in range(dd)}
    return ProcessAnalytics(tuple(pi), beta, alpha, f_star)


def write_sequence(path: str | Path, seq: DataStream) -> None:
    """One line per round: the ``D`` covariate bits, oldest first, a space, the outcome."""
    lines = []
    for win, y in seq.windows():
        lines.append(f"{win} {y}\n")
    Path(path).write_text("".join(lines), encoding="ascii", newline="\n")


def read_sequence(path: str | Path, depth: int | None = None) -> DataStream:
    keys, outcomes = [], []
    seen_depth = depth
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) == 1 and seen_depth in (None, 0):
            parts = ["", parts[0]]
        if len(parts) != 2 or parts[1] not in ("0", "1") or set(parts[0]) - {"0", "1"}:
            raise ConfigurationError(f"{path}:{lineno}: expected '<bits> <outcome>', got {line!r}")
        bits, y = parts
        if seen_depth is None:
            seen_depth = len(bits)
        if len(bits) != seen_depth:
            raise ConfigurationError(f"{path}:{lineno}: expected {seen_depth} context bits, got {len(bits)}")
        keys.append(ContextWindow.of([int(b) for b in bits]).key)
        outcomes.append(int(y))
    if not outcomes:
        raise ConfigurationError(f"{path}: empty sequence file")
    return DataStream(seen_depth, np.asarray(keys, dtype=np.int64), np.asarray(outcomes, dtype=np.int64))


def adversary_next(w: Sequence[float]) -> int:
    """Worst-case outcome against ``w``: the less likely symbol, 1 on ties."""
    return 0 if w[0] < w[1] else 1
