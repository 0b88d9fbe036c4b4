"""Command-line entry point: ``ctahedge {run,sweep,equivalence-check,plot,generate,bench}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from ..errors import ConfigurationError, NumericalConsistencyError, UsageError
from ..oracle import equivalence_check
from ..processes import DataStream, covariate_keys, generate_stochastic
from .config import Algorithm, ExperimentConfig, read_config_file

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3
EQUIVALENCE_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    # Defaults are None so config-file values can sit between built-ins and flags.
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--algorithm", help="ctah | ftl:<h> | fixed-eta:<eta>")
    p.add_argument("--prior", help="uniform | prop | table:<path>")
    p.add_argument("--depth", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--process", help="xor3 | iid07 | file:<path> | adversary")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--sample", action="store_const", const=True, default=None,
                   help="draw predictions from w_t instead of expected-loss accounting")
    p.add_argument("--ftl-ties", choices=["split", "zero"])
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel worker processes")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctahedge", description=__doc__.split(":")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run repetitions, write traces and check bounds")
    _experiment_flags(run)

    sweep = sub.add_parser("sweep", help="uniform-prior model-order sweep on a stochastic process")
    _experiment_flags(sweep)
    sweep.add_argument("--orders", help="comma-separated orders or a range lo-hi (default 0..depth)")

    eq = sub.add_parser("equivalence-check", help="compare factored and brute-force predictions")
    eq.add_argument("--depth", type=int, default=2)
    eq.add_argument("--prior", default="prop")
    eq.add_argument("--horizon", type=int, default=50)
    eq.add_argument("--seed", type=int, default=0)

    pl = sub.add_parser("plot", help="SVG line plot of one column from several CSV files")
    pl.add_argument("csv", nargs="*")
    pl.add_argument("--output", "-o", required=True)
    pl.add_argument("--y", default="mean_regret_3", help="column to plot against t")
    pl.add_argument("--labels", help="comma-separated series labels")
    pl.add_argument("--normalize", action="store_true", help="divide the column by t")
    pl.add_argument("--title")

    gen = sub.add_parser("generate", help="write a sequence file from a process")
    gen.add_argument("--process", default="xor3", choices=["xor3", "iid07", "covariates"])
    gen.add_argument("--depth", type=int, default=8)
    gen.add_argument("--horizon", type=int, default=1500)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", "-o", required=True)

    bench = sub.add_parser("bench", help="time one prediction at several depths")
    bench.add_argument("--depths", default="0,8,10,12,14")
    bench.add_argument("--rounds", type=int, default=200)
    bench.add_argument("--repeats", type=int, default=5)
    return parser


_CONVERT = {"depth": int, "horizon": int, "seed": int, "reps": int, "jobs": int,
            "sample": lambda s: s.lower() in ("1", "true", "yes", "on"), "algorithm": Algorithm.parse}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Built-in defaults, then the config file, then explicit flags."""
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    if args.config:
        for key, raw in read_config_file(args.config).items():
            if key not in known:
                raise ConfigurationError(f"{args.config}: unknown key {key!r}")
            try:
                values[key] = _CONVERT.get(key, str)(raw)
            except ValueError:
                raise ConfigurationError(f"{args.config}: bad value for {key}: {raw!r}") from None
    for key in known:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = Algorithm.parse(flag) if key == "algorithm" else flag
    return ExperimentConfig(**values)


def _parse_orders(text: str | None, depth: int) -> list[int] | None:
    if not text:
        return None
    try:
        if "-" in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"bad --orders {text!r}") from None


def cmd_run(args) -> int:
    from .runner import run, write_outputs

    config = config_from_args(args)
    result = run(config)
    write_outputs(result, config.out)
    for i, verdicts in enumerate(result.verdicts):
        for v in verdicts:
            if not v.passed:
                print(f"rep {i} (seed {config.seeds()[i]}): {v.line()}", file=sys.stderr)
    agg = result.aggregate
    print(f"wrote {len(result.traces)} trace(s) to {config.out}; "
          f"mean cumulative loss {agg['mean_cumulative_loss'][-1]:.6g} at T={config.horizon}")
    return EXIT_OK if result.passed else EXIT_CHECK


def cmd_sweep(args) -> int:
    from .runner import sweep_model_order, write_sweep

    config = config_from_args(args)
    rows = sweep_model_order(config, _parse_orders(args.orders, config.depth))
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(rows, out / "sweep.csv")
    print(f"{'h':>3} {'loss/T':>9} {'pi_hat':>8} {'pi_star':>8} {'estimation':>11}")
    for r in rows:
        print(f"{r.h:>3} {r.mean_loss_over_t:>9.4f} {r.mean_pi_hat:>8.4f} {r.pi_star:>8.4f} {r.mean_estimation:>11.3f}")
    return EXIT_OK


def cmd_equivalence(args) -> int:
    dev = equivalence_check(args.depth, args.prior, args.horizon, args.seed)
    ok = dev <= EQUIVALENCE_TOL
    print(f"max deviation {dev:.6e} ({'PASS' if ok else 'FAIL'}, tolerance {EQUIVALENCE_TOL:g})")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_plot(args) -> int:
    from .plotting import plot

    labels = args.labels.split(",") if args.labels else None
    out = plot(args.csv, args.output, column=args.y, labels=labels, normalize=args.normalize, title=args.title)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    from ..processes import iid07_spec, write_sequence, xor3_spec

    if args.horizon < 1:
        raise ConfigurationError("horizon must be at least 1")
    if args.process == "covariates":
        keys = covariate_keys(args.depth, args.horizon, args.seed)
        stream = DataStream(args.depth, keys, keys & 1)  # placeholder outcomes: most recent bit
    else:
        spec = xor3_spec(args.depth) if args.process == "xor3" else iid07_spec(args.depth)
        stream = generate_stochastic(spec, args.horizon, args.seed)
    write_sequence(args.output, stream)
    print(f"wrote {len(stream)} rounds to {args.output}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import predict_time

    depths = [int(d) for d in args.depths.split(",")]
    base = None
    for d in depths:
        sec = predict_time(d, rounds=args.rounds, repeats=args.repeats)
        base = base or sec
        print(f"D={d:>2}  {sec * 1e6:10.1f} us/predict  x{sec / base:6.2f}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "equivalence-check": cmd_equivalence,
            "plot": cmd_plot, "generate": cmd_generate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalConsistencyError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
