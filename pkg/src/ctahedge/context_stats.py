"""Cumulative per-context loss counts for every suffix length of the context.

Context keys are packed little-endian-recent integers: bit ``i`` of a key is
the ``(i+1)``-th most recent covariate, so the ``h``-bit suffix of a key is
``key & (2**h - 1)``.  All counts live in one dense ``int64`` array laid out
level by level (level ``h`` occupies ``2**h`` consecutive slots starting at
``2**h - 1``), which lets the forecaster reduce every level in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import ConfigurationError, EmptyDataError, UsageError

MAX_DEPTH = 24


@dataclass(frozen=True)
class ContextWindow:
    """The last ``depth`` covariate bits ``(c_1, ..., c_D)``, ``c_D`` most recent."""

    depth: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != self.depth:
            raise UsageError(f"expected {self.depth} bits, got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise UsageError(f"context bits must be 0/1, got {self.bits}")

    @classmethod
    def of(cls, bits: Sequence[int]) -> "ContextWindow":
        bits = tuple(int(b) for b in bits)
        return cls(len(bits), bits)

    @classmethod
    def from_key(cls, key: int, depth: int) -> "ContextWindow":
        return cls(depth, tuple((key >> (depth - 1 - j)) & 1 for j in range(depth)))

    @property
    def key(self) -> int:
        key = 0
        for i in range(self.depth):
            key |= self.bits[self.depth - 1 - i] << i
        return key

    def suffix(self, h: int) -> "ContextWindow":
        """The ``h`` most recent bits; ``suffix(0)`` is the empty context."""
        if not 0 <= h <= self.depth:
            raise UsageError(f"suffix length {h} outside 0..{self.depth}")
        return ContextWindow(h, self.bits[self.depth - h:])

    def __str__(self):
        return "".join(map(str, self.bits))


ContextLike = Union[ContextWindow, int, Sequence[int]]


class LossCounts(NamedTuple):
    loss_predict_0: int
    loss_predict_1: int

    @property
    def arrivals(self) -> int:
        return self.loss_predict_0 + self.loss_predict_1


def level_offsets(depth: int) -> np.ndarray:
    """Start index of each level ``h = 0..depth`` in the flat slot array."""
    return (1 << np.arange(depth + 1, dtype=np.int64)) - 1


def check_symbol(outcome) -> int:
    if outcome not in (0, 1):
        raise UsageError(f"outcome must be 0 or 1, got {outcome!r}")
    return int(outcome)


class ContextStatsTable:
    """Loss counts ``L_{x(h),t,y}`` for all suffix lengths ``h = 0..depth``.

    ``counts[slot, y]`` is the number of recorded rounds at that context in
    which predicting ``y`` would have been wrong.  Per-level hindsight losses
    and seen-context counts are maintained incrementally.
    """

    def __init__(self, depth: int):
        if not isinstance(depth, (int, np.integer)) or not 0 <= depth <= MAX_DEPTH:
            raise ConfigurationError(f"depth must be an integer in 0..{MAX_DEPTH}, got {depth!r}")
        self.depth = int(depth)
        self.round = 0
        self.offsets = level_offsets(self.depth)
        self.masks = self.offsets.copy()  # 2**h - 1 doubles as the suffix mask
        self.counts = np.zeros(((1 << (self.depth + 1)) - 1, 2), dtype=np.int64)
        self._best = np.zeros(self.depth + 1, dtype=np.int64)
        self._seen = np.zeros(self.depth + 1, dtype=np.int64)

    def __repr__(self):
        return f"ContextStatsTable(depth={self.depth}, round={self.round})"

    @property
    def n_slots(self) -> int:
        return self.counts.shape[0]

    def key_of(self, context: ContextLike, depth: int | None = None) -> int:
        """Normalize a context argument to a packed key of ``depth`` bits."""
        depth = self.depth if depth is None else depth
        if isinstance(context, ContextWindow):
            if context.depth != depth:
                raise UsageError(f"context depth {context.depth} does not match {depth}")
            return context.key
        if isinstance(context, (int, np.integer)):
            if not 0 <= context < (1 << depth):
                raise UsageError(f"key {context} does not fit in {depth} bits")
            return int(context)
        return self.key_of(ContextWindow.of(context), depth)

    def slots(self, key: int) -> np.ndarray:
        """Slot index of the current context at every level (``D+1`` entries)."""
        return self.offsets + (key & self.masks)

    def level(self, h: int) -> np.ndarray:
        self._check_level(h)
        start = (1 << h) - 1
        view = self.counts[start:start + (1 << h)]
        view.flags.writeable = False
        return view

    def record(self, context: ContextLike, outcome: int) -> None:
        """Add one round: every suffix of ``context`` charges predicting ``1 - outcome``."""
        outcome = check_symbol(outcome)
        idx = self.slots(self.key_of(context))
        wrong = 1 - outcome
        before_wrong = self.counts[idx, wrong]
        before_right = self.counts[idx, outcome]
        # min(a+1, b) - min(a, b) is 1 exactly when a < b
        self._best += before_wrong < before_right
        self._seen += (before_wrong + before_right) == 0
        self.counts[idx, wrong] += 1
        self.round += 1

    def loss_counts(self, h: int, key: ContextLike) -> LossCounts:
        self._check_level(h)
        k = self.key_of(key, h)
        a, b = self.counts[(1 << h) - 1 + k]
        return LossCounts(int(a), int(b))

    def appearance_count(self, h: int, key: ContextLike) -> int:
        return self.loss_counts(h, key).arrivals

    def seen_contexts(self, h: int) -> int:
        self._check_level(h)
        return int(self._seen[h])

    def best_order_loss(self, d: int) -> int:
        """Hindsight loss of the best ``d``-th order tree expert: sum of per-context minima."""
        self._check_level(d)
        return int(self._best[d])

    def best_order_losses(self) -> np.ndarray:
        return self._best.copy()

    def estimated_unpredictability(self, h: int) -> float:
        if self.round == 0:
            raise EmptyDataError("estimated unpredictability needs at least one round")
        return self.best_order_loss(h) / self.round

    def copy(self) -> "ContextStatsTable":
        other = ContextStatsTable.__new__(ContextStatsTable)
        other.depth = self.depth
        other.round = self.round
        other.offsets = self.offsets
        other.masks = self.masks
        other.counts = self.counts.copy()
        other._best = self._best.copy()
        other._seen = self._seen.copy()
        return other

    def _check_level(self, h: int) -> None:
        if not 0 <= h <= self.depth:
            raise UsageError(f"order {h} outside 0..{self.depth}")


def new_table(depth: int) -> ContextStatsTable:
    return ContextStatsTable(depth)
