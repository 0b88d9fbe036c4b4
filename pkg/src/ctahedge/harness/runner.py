"""Experiment execution: per-seed simulation, traces, aggregation and the model-order sweep."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .. import rate
from ..baselines import ftl_predict
from ..context_stats import ContextStatsTable
from ..errors import ConfigurationError
from ..forecaster import PriorSpec, _evaluate, make_prior, posterior_from_log_weights
from ..processes import (
    PREDICTION_STREAM,
    RNG_ID,
    adversary_next,
    analytics,
    covariate_keys,
    generate_stochastic,
    make_rng,
)
from .bounds import Verdict, bound_report, sandwich_margins
from .config import Algorithm, ExperimentConfig

TRACE_HEADER = "# ctah-trace v1"
AGGREGATE_HEADER = "# ctah-aggregate v1"
SWEEP_HEADER = "# ctah-sweep v1"


@dataclass(frozen=True)
class TraceRow:
    t: int
    expected_loss: float
    cumulative_loss: float
    eta: float
    delta: float
    Delta: float
    v: float
    V: float
    q: tuple[float, ...]
    regret: tuple[float, ...]


def trace_columns(depth: int) -> list[str]:
    return (["t", "expected_loss", "cumulative_loss", "eta", "delta", "Delta", "v", "V"]
            + [f"q_{h}" for h in range(depth + 1)]
            + [f"regret_{d}" for d in range(depth + 1)])


@dataclass
class Trace:
    """Column arrays for one run; ``loss``/``cum_loss``/``regret`` are realized when sampling."""

    depth: int
    t: np.ndarray
    loss: np.ndarray
    cum_loss: np.ndarray
    eta: np.ndarray
    delta: np.ndarray
    delta_raw: np.ndarray
    Delta: np.ndarray
    v: np.ndarray
    V: np.ndarray
    M: np.ndarray
    H_expected: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    q: np.ndarray
    regret: np.ndarray
    expected_regret: np.ndarray
    best_losses: np.ndarray  # hindsight loss per order after each round
    sandwich_lower: np.ndarray
    sandwich_upper: np.ndarray
    outcomes: np.ndarray
    keys: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.t)

    def rows(self) -> Iterator[TraceRow]:
        for i in range(self.horizon):
            yield TraceRow(int(self.t[i]), float(self.loss[i]), float(self.cum_loss[i]), float(self.eta[i]),
                           float(self.delta[i]), float(self.Delta[i]), float(self.v[i]), float(self.V[i]),
                           tuple(self.q[i].tolist()), tuple(self.regret[i].tolist()))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(TRACE_HEADER + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(trace_columns(self.depth))
            for row in self.rows():
                writer.writerow([row.t] + [repr(x) for x in (row.expected_loss, row.cumulative_loss, row.eta,
                                                             row.delta, row.Delta, row.v, row.V)]
                                + [repr(x) for x in row.q] + [repr(x) for x in row.regret])


def simulate(depth: int, prior: PriorSpec, algorithm: Algorithm, keys: np.ndarray,
             outcomes: np.ndarray | None = None, *, ftl_ties: str = "split",
             sample_rng: np.random.Generator | None = None) -> Trace:
    """Play ``algorithm`` over the given contexts.

    With ``outcomes=None`` each outcome is chosen by the adaptive adversary
    after seeing the prediction.  With a ``sample_rng`` the reported losses are
    those of predictions drawn from ``w_t``; the AdaHedge bookkeeping always
    uses expected losses.
    """
    T = len(keys)
    n = depth + 1
    stats = ContextStatsTable(depth)
    hedge = rate.fresh()
    log_g = prior.log_g_array
    cols = {name: np.empty(T) for name in
            ("loss", "eta", "delta", "delta_raw", "Delta", "v", "V", "M", "H", "w0", "w1", "lo", "hi")}
    q = np.empty((T, n))
    best_after = np.empty((T, n), dtype=np.int64)
    realized = np.empty(T)
    outs = np.empty(T, dtype=np.int64)
    one_hot = None
    if algorithm.kind == "ftl":
        one_hot = np.zeros(n)
        one_hot[algorithm.order] = 1.0
    cum = 0.0
    for i, key in enumerate(keys.tolist()):
        if algorithm.kind == "ftl":
            eta = math.inf
            w = ftl_predict(stats, key, algorithm.order, ftl_ties)
            q[i] = one_hot
            lo = hi = math.nan
        else:
            eta = hedge.eta_current if algorithm.kind == "ctah" else algorithm.eta
            ev = _evaluate(stats, key, eta, prior)
            w = ev.prediction
            q[i] = posterior_from_log_weights(ev.log_q).q
            lo, hi = sandwich_margins(ev.log_q, eta, stats.best_order_losses(), log_g)
        y = adversary_next(w) if outcomes is None else int(outcomes[i])
        h, m, v = rate.round_losses(w, y, eta)
        hedge = rate.advance(hedge, h, m, v)
        if sample_rng is not None:
            guess = int(sample_rng.random() < w[1])
            loss = float(guess != y)
        else:
            loss = h
        cum += loss
        stats.record(key, y)
        best_after[i] = stats.best_order_losses()
        outs[i] = y
        realized[i] = cum
        c = cols
        c["loss"][i], c["eta"][i], c["delta_raw"][i] = loss, eta, h - m
        c["delta"][i] = rate.mixability_gap(h, m)
        c["Delta"][i], c["v"][i], c["V"][i] = hedge.delta_cum, v, hedge.variance_cum
        c["M"][i], c["H"][i] = hedge.mix_loss_cum, hedge.expected_loss_cum
        c["w0"][i], c["w1"][i], c["lo"][i], c["hi"][i] = w[0], w[1], lo, hi
    return Trace(
        depth=depth, t=np.arange(1, T + 1), loss=cols["loss"], cum_loss=realized, eta=cols["eta"],
        delta=cols["delta"], delta_raw=cols["delta_raw"], Delta=cols["Delta"], v=cols["v"], V=cols["V"],
        M=cols["M"], H_expected=cols["H"], w0=cols["w0"], w1=cols["w1"], q=q,
        regret=realized[:, None] - best_after, expected_regret=cols["H"][:, None] - best_after,
        best_losses=best_after, sandwich_lower=cols["lo"], sandwich_upper=cols["hi"],
        outcomes=outs, keys=np.asarray(keys, dtype=np.int64),
    )


def stream_for(config: ExperimentConfig, seed: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Context keys and outcomes (``None`` for the adversary) for one repetition."""
    spec = config.stochastic_spec()
    if spec is not None:
        data = generate_stochastic(spec, config.horizon, seed)
        return data.keys, data.outcomes
    if config.process == "adversary":
        return covariate_keys(config.depth, config.horizon, seed), None
    data = config.file_stream()
    return data.keys[:config.horizon], data.outcomes[:config.horizon]


def run_repetition(config: ExperimentConfig, rep: int) -> tuple[Trace, list[Verdict]]:
    seed = config.seeds()[rep]
    prior = config.prior_spec()
    keys, outcomes = stream_for(config, seed)
    sample_rng = make_rng(seed, PREDICTION_STREAM) if config.sample else None
    trace = simulate(config.depth, prior, config.algorithm, keys, outcomes,
                     ftl_ties=config.ftl_ties, sample_rng=sample_rng)
    return trace, bound_report(trace, prior, config.algorithm.kind)


def _run_repetition_args(args):
    return run_repetition(*args)


@dataclass
class RunResult:
    config: ExperimentConfig
    traces: list[Trace]
    verdicts: list[list[Verdict]]
    aggregate: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for rep in self.verdicts for v in rep)

    def failures(self) -> list[tuple[int, Verdict]]:
        return [(i, v) for i, rep in enumerate(self.verdicts) for v in rep if not v.passed]


def run(config: ExperimentConfig) -> RunResult:
    """Execute every repetition (in parallel when ``config.jobs > 1``) and aggregate."""
    args = [(config, i) for i in range(config.reps)]
    if config.jobs > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_repetition_args, args))
    else:
        results = [run_repetition(*a) for a in args]
    traces = [r[0] for r in results]
    return RunResult(config, traces, [r[1] for r in results], aggregate(traces))


def aggregate(traces: list[Trace]) -> dict[str, np.ndarray]:
    """Per-round mean and standard deviation across repetitions, folded in repetition order."""
    if not traces:
        raise ConfigurationError("nothing to aggregate")
    depth = traces[0].depth
    t = traces[0].t
    loss = np.stack([tr.cum_loss for tr in traces])
    regret = np.stack([tr.regret for tr in traces])
    out = {"t": t, "mean_cumulative_loss": loss.mean(0), "std_cumulative_loss": loss.std(0),
           "mean_loss_over_t": loss.mean(0) / t}
    for d in range(depth + 1):
        out[f"mean_regret_{d}"] = regret[:, :, d].mean(0)
        out[f"std_regret_{d}"] = regret[:, :, d].std(0)
        out[f"mean_regret_over_t_{d}"] = regret[:, :, d].mean(0) / t
    return out


def write_columns(path: str | Path, header: str, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*(columns[k].tolist() for k in names)):
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_outputs(result: RunResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, trace in enumerate(result.traces):
        path = out / f"trace_{i:03d}.csv"
        trace.write_csv(path)
        written.append(path)
    agg = out / "aggregate.csv"
    write_columns(agg, AGGREGATE_HEADER, result.aggregate)
    written.append(agg)
    cfg = out / "config.txt"
    cfg.write_text("\n".join(result.config.as_lines() + [f"rng = {RNG_ID}"]) + "\n")
    written.append(cfg)
    summary = out / "summary.txt"
    summary.write_text(summary_text(result))
    written.append(summary)
    return written


def summary_text(result: RunResult) -> str:
    agg = result.aggregate
    T = int(agg["t"][-1])
    lines = [f"algorithm = {result.config.algorithm}", f"prior = {result.config.prior}",
             f"process = {result.config.process}", f"reps = {len(result.traces)}", f"T = {T}",
             f"mean cumulative loss at T = {agg['mean_cumulative_loss'][-1]:.6g}"]
    for d in range(result.config.depth + 1):
        lines.append(f"mean R_T,{d} = {agg[f'mean_regret_{d}'][-1]:.6g}")
    for i, verdicts in enumerate(result.verdicts):
        for v in verdicts:
            lines.append(f"rep {i}: {v.line()}")
    lines.append("overall: " + ("PASS" if result.passed else "FAIL"))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepRow:
    h: int
    mean_loss_over_t: float
    std_loss_over_t: float
    mean_pi_hat: float
    std_pi_hat: float
    pi_star: float
    mean_estimation: float  # cumulative loss minus T * pi_star_h


def _sweep_repetition(args) -> np.ndarray:
    config, rep, orders = args
    seed = config.seeds()[rep]
    data = generate_stochastic(config.stochastic_spec(), config.horizon, seed)
    out = np.empty((len(orders), 2))
    for j, h in enumerate(orders):
        trace = simulate(h, make_prior("uniform", h), Algorithm("ctah"),
                         data.keys & ((1 << h) - 1), data.outcomes)
        out[j] = trace.cum_loss[-1], trace.best_losses[-1, h] / config.horizon
    return out


def sweep_model_order(config: ExperimentConfig, orders: list[int] | None = None) -> list[SweepRow]:
    """Uniform-prior CTAH(h) for each ``h`` on the same data streams."""
    spec = config.stochastic_spec()
    if spec is None:
        raise ConfigurationError("the model-order sweep needs a stochastic process (xor3 or iid07)")
    orders = list(range(config.depth + 1)) if orders is None else list(orders)
    if any(not 0 <= h <= config.depth for h in orders):
        raise ConfigurationError(f"sweep orders must lie in 0..{config.depth}")
    args = [(config, i, orders) for i in range(config.reps)]
    if config.jobs > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_rep = list(pool.map(_sweep_repetition, args))
    else:
        per_rep = [_sweep_repetition(a) for a in args]
    res = np.stack(per_rep)  # (reps, orders, [loss, pi_hat])
    pi_star = analytics(spec).pi_star
    T = config.horizon
    rows = []
    for j, h in enumerate(orders):
        loss, pi_hat = res[:, j, 0], res[:, j, 1]
        rows.append(SweepRow(h, float(loss.mean() / T), float(loss.std() / T), float(pi_hat.mean()),
                             float(pi_hat.std()), pi_star[h], float(loss.mean() - T * pi_star[h])))
    return rows


def write_sweep(rows: list[SweepRow], path: str | Path) -> None:
    cols = {name: np.array([getattr(r, name) for r in rows]) for name in SweepRow.__dataclass_fields__}
    write_columns(path, SWEEP_HEADER, cols)
