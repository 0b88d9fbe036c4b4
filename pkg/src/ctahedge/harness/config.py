"""Experiment configuration: flag/config-file parsing into an :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigurationError
from ..forecaster import PriorSpec, make_prior
from ..processes import DataStream, StochasticSpec, iid07_spec, read_sequence, xor3_spec
from ..baselines import DEFAULT_FIXED_ETA, TIE_RULES


@dataclass(frozen=True)
class Algorithm:
    kind: str  # "ctah" | "ftl" | "fixed_eta"
    order: int | None = None
    eta: float | None = None

    @classmethod
    def parse(cls, text: str) -> "Algorithm":
        name, _, arg = text.strip().partition(":")
        if name == "ctah" and not arg:
            return cls("ctah")
        if name == "ftl":
            try:
                return cls("ftl", order=int(arg))
            except ValueError:
                raise ConfigurationError(f"ftl needs an integer order, got {text!r}") from None
        if name in ("fixed-eta", "fixed_eta"):
            try:
                eta = float(arg) if arg else DEFAULT_FIXED_ETA
            except ValueError:
                raise ConfigurationError(f"bad fixed learning rate in {text!r}") from None
            if not (eta > 0 and math.isfinite(eta)):
                raise ConfigurationError(f"fixed learning rate must be finite and positive, got {eta}")
            return cls("fixed_eta", eta=eta)
        raise ConfigurationError(f"unknown algorithm {text!r}; use ctah, ftl:<h> or fixed-eta:<eta>")

    def __str__(self):
        if self.kind == "ftl":
            return f"ftl:{self.order}"
        if self.kind == "fixed_eta":
            return f"fixed-eta:{self.eta:g}"
        return "ctah"


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: Algorithm = field(default_factory=lambda: Algorithm("ctah"))
    prior: str = "prop"
    depth: int = 8
    horizon: int = 1500
    process: str = "xor3"
    seed: int = 0
    reps: int = 1
    sample: bool = False
    ftl_ties: str = "split"
    out: str = "out"
    jobs: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigurationError(f"reps must be at least 1, got {self.reps}")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be at least 1, got {self.horizon}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {self.jobs}")
        if self.ftl_ties not in TIE_RULES:
            raise ConfigurationError(f"ftl ties must be one of {TIE_RULES}")
        if self.algorithm.kind == "ftl" and not 0 <= self.algorithm.order <= self.depth:
            raise ConfigurationError(f"ftl order {self.algorithm.order} outside 0..{self.depth}")
        self.prior_spec()  # validates prior and depth together
        self.stochastic_spec()

    def prior_spec(self) -> PriorSpec:
        text = self.prior
        if text in ("prop", "proportional", "uniform"):
            return make_prior(text, self.depth)
        if text.startswith("table:"):
            return make_prior("custom", self.depth, read_prior_table(text[len("table:"):]))
        raise ConfigurationError(f"unknown prior {text!r}; use uniform, prop or table:<path>")

    @property
    def process_kind(self) -> str:
        return self.process.split(":", 1)[0]

    def stochastic_spec(self) -> StochasticSpec | None:
        if self.process == "xor3":
            return xor3_spec(self.depth)
        if self.process == "iid07":
            return iid07_spec(self.depth)
        if self.process == "adversary" or self.process.startswith("file:"):
            return None
        raise ConfigurationError(f"unknown process {self.process!r}; use xor3, iid07, file:<path> or adversary")

    def file_stream(self) -> DataStream:
        stream = read_sequence(self.process[len("file:"):])
        if stream.depth != self.depth:
            raise ConfigurationError(f"sequence file has depth {stream.depth}, config depth is {self.depth}")
        if len(stream) < self.horizon:
            raise ConfigurationError(f"sequence file has {len(stream)} rounds, horizon is {self.horizon}")
        return stream

    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.reps)]

    def as_lines(self) -> list[str]:
        return [f"{f.name} = {getattr(self, f.name)}" for f in fields(self)]


def read_prior_table(path: str) -> list[float]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read prior table {path}: {exc}") from exc
    try:
        return [float(tok) for tok in text.split()]
    except ValueError:
        raise ConfigurationError(f"prior table {path} must hold whitespace-separated numbers") from None


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="ascii").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out
