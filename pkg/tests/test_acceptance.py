"""Acceptance criteria 1-10.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from ctahedge import make_prior
from ctahedge.context_stats import new_table
from ctahedge.harness.bench import scaling_ratio
from ctahedge.harness.config import Algorithm, ExperimentConfig
from ctahedge.harness.runner import run, run_repetition, sweep_model_order
from ctahedge.oracle import equivalence_check
from ctahedge.processes import analytics, generate_stochastic, iid07_spec, xor3_spec

SEEDS = 50
T_STOCH = 1500
T_ADV = 10_000
ORDER = 3


def note(results, number, ok, detail, part=""):
    results.setdefault(number, []).append((part, bool(ok), detail))


def timed(fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - start


def final_mean(result, column):
    return float(result.aggregate[column][-1])


def build_xor3_runs():
    runs, elapsed = {}, 0.0
    for name, alg, prior in [("prop", "ctah", "prop"), ("uniform", "ctah", "uniform"), ("ftl", "ftl:3", "prop")]:
        cfg = ExperimentConfig(algorithm=Algorithm.parse(alg), prior=prior, process="xor3",
                               depth=8, horizon=T_STOCH, reps=SEEDS)
        runs[name], dt = timed(run, cfg)
        elapsed += dt
    return runs, elapsed


def build_iid07_runs():
    runs = {}
    for name, alg, prior in [("prop", "ctah", "prop"), ("uniform", "ctah", "uniform"), ("ftl", "ftl:0", "prop")]:
        cfg = ExperimentConfig(algorithm=Algorithm.parse(alg), prior=prior, process="iid07",
                               depth=8, horizon=T_STOCH, reps=SEEDS)
        runs[name] = run(cfg)
    return runs


def build_adversarial_run():
    cfg = ExperimentConfig(process="adversary", prior="prop", depth=8, horizon=T_ADV, seed=0)
    (trace, verdicts), elapsed = timed(run_repetition, cfg, 0)
    return trace, verdicts, elapsed


@pytest.fixture(scope="session")
def xor3_runs():
    return build_xor3_runs()


@pytest.fixture(scope="session")
def iid07_runs():
    return build_iid07_runs()


@pytest.fixture(scope="session")
def adversarial_run():
    return build_adversarial_run()


def test_c1_oracle_equivalence(acceptance_results):
    start = time.perf_counter()
    worst = 0.0
    for depth in (1, 2, 3):
        for prior in (make_prior("uniform", depth), make_prior("proportional", depth),
                      make_prior("custom", depth, [1.0] * (depth + 1))):
            for seed in range(5):
                worst = max(worst, equivalence_check(depth, prior, 50, seed))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    note(acceptance_results, 1, ok, f"max deviation {worst:.3e} (tol 1e-9), {elapsed:.2f}s (limit 10s)")
    assert worst <= 1e-9
    assert elapsed < 10


def _all_verdicts(xor3_runs, iid07_runs, adversarial_run):
    out = []
    for group in (xor3_runs[0], iid07_runs):
        for name, result in group.items():
            for rep, verdicts in enumerate(result.verdicts):
                out += [(f"{result.config.process}/{name}/rep{rep}", v) for v in verdicts]
    out += [("adversary", v) for v in adversarial_run[1]]
    return out


def test_c2_per_round_invariants(acceptance_results, xor3_runs, iid07_runs, adversarial_run):
    checked = [(run_id, v) for run_id, v in _all_verdicts(xor3_runs, iid07_runs, adversarial_run)
               if v.name == "per-round invariants"]
    bad = [f"{r}: {v.line()}" for r, v in checked if not v.passed]
    note(acceptance_results, 2, not bad, f"{len(checked)} runs checked, {len(bad)} violations"
         + (f" (first: {bad[0]})" if bad else ""))
    assert not bad


def test_c3_inequality_suite(acceptance_results, xor3_runs, iid07_runs, adversarial_run):
    names = ("second-order bound", "delta-variance", "log-Q sandwich")
    checked = [(r, v) for r, v in _all_verdicts(xor3_runs, iid07_runs, adversarial_run)
               if v.name.startswith(names)]
    bad = [f"{r}: {v.line()}" for r, v in checked if not v.passed]
    sandwich_prop = [v for r, v in checked if v.name == "log-Q sandwich" and "/prop/" in r]
    ok = not bad and sandwich_prop
    note(acceptance_results, 3, ok, f"{len(checked)} verdicts over all runs, {len(bad)} violations"
         + (f" (first: {bad[0]})" if bad else ""))
    assert sandwich_prop
    assert not bad


def test_c4_adversarial_rate(acceptance_results, adversarial_run):
    trace, verdicts, elapsed = adversarial_run
    worst = [v for v in verdicts if v.name.startswith("worst-case rate")]
    assert len(worst) == 9
    failed = [v.line() for v in worst if not v.passed]
    tight = min(worst, key=lambda v: v.margin)
    ok = not failed and elapsed < 30
    note(acceptance_results, 4, ok, f"all d in 0..8 within the closed form, tightest {tight.name} "
         f"margin {tight.margin:.1f}; {elapsed:.2f}s (limit 30s)" if not failed else "; ".join(failed))
    assert not failed
    assert elapsed < 30


def test_c5_xor3_comparison(acceptance_results, xor3_runs):
    runs, elapsed = xor3_runs
    r_prop = final_mean(runs["prop"], f"mean_regret_{ORDER}")
    r_unif = final_mean(runs["uniform"], f"mean_regret_{ORDER}")
    loss = {k: final_mean(v, "mean_cumulative_loss") for k, v in runs.items()}
    ratio_ok = r_prop <= 0.5 * r_unif
    order_ok = loss["ftl"] <= loss["prop"] <= loss["uniform"]
    note(acceptance_results, 5, ratio_ok and order_ok and elapsed < 300,
         f"R_T,3 prop {r_prop:.1f} vs uniform {r_unif:.1f} (ratio {r_prop / r_unif:.3f} <= 0.5); "
         f"loss FTL {loss['ftl']:.1f} <= prop {loss['prop']:.1f} <= uniform {loss['uniform']:.1f}; "
         f"{elapsed:.1f}s (limit 300s)")
    assert ratio_ok
    assert order_ok
    assert elapsed < 300


def test_c6_stochastic_plateau(acceptance_results, xor3_runs):
    curve = xor3_runs[0]["prop"].aggregate[f"mean_regret_{ORDER}"]
    r_half, r_full = curve[T_STOCH // 2 - 1], curve[T_STOCH - 1]
    share = (r_full - r_half) / r_full
    ok = share <= 0.25
    note(acceptance_results, 6, ok, f"xor3 prop R_3 {r_half:.1f} -> {r_full:.1f}, "
         f"growth {share:.1%} of final (<= 25%)", part="plateau")
    assert ok


def test_c6_adversarial_growth(acceptance_results, adversarial_run):
    trace = adversarial_run[0]
    r = trace.expected_regret[:, ORDER]
    r_half, r_full = r[T_STOCH // 2 - 1], r[T_STOCH - 1]
    growth = (r_full - r_half) / r_half
    late = (r[T_ADV - 1] - r[T_ADV // 2 - 1]) / r[T_ADV // 2 - 1]
    ok = growth >= 0.35
    note(acceptance_results, 6, ok, f"adversary R_3 t=750 -> 1500: {r_half:.1f} -> {r_full:.1f}, "
         f"growth {growth:.1%} (>= 35%); for reference t=5000 -> 10000 grows {late:.1%}", part="adversarial")
    assert ok


def test_c7_iid_overfitting(acceptance_results, iid07_runs):
    loss = {k: final_mean(v, "mean_cumulative_loss") for k, v in iid07_runs.items()}
    close = abs(loss["prop"] - loss["ftl"]) <= 0.1 * loss["ftl"]
    overfit = loss["uniform"] >= 1.2 * loss["ftl"]
    note(acceptance_results, 7, close and overfit,
         f"loss prop {loss['prop']:.1f}, FTL {loss['ftl']:.1f} (within 10%: {close}); "
         f"uniform {loss['uniform']:.1f} = {loss['uniform'] / loss['ftl']:.2f} x FTL (>= 1.2)")
    assert close
    assert overfit


def test_c8_model_order_sweep(acceptance_results):
    rows = sweep_model_order(ExperimentConfig(process="xor3", depth=8, horizon=T_STOCH, reps=SEEDS))
    pi = np.array([r.mean_pi_hat for r in rows])
    loss = np.array([r.mean_loss_over_t for r in rows])
    at_order = abs(pi[ORDER] - 0.2) <= 0.03
    decreasing = bool(np.all(np.diff(pi[:ORDER + 1]) <= 0))
    flat = bool(np.all(np.abs(pi[ORDER + 1:] - pi[ORDER]) <= 0.03))
    argmin = int(np.argmin(loss))
    ok = at_order and decreasing and flat and argmin == ORDER
    note(acceptance_results, 8, ok,
         "pi_hat " + " ".join(f"{p:.3f}" for p in pi) + f"; loss/T minimized at h={argmin}")
    assert decreasing
    assert at_order
    assert flat
    assert argmin == ORDER


def _pi_hat(spec, h, horizon=100_000, seed=0):
    stats = new_table(spec.depth)
    for k, y in generate_stochastic(spec, horizon, seed):
        stats.record(k, y)
    return stats.estimated_unpredictability(h)


def test_c9_analytics_cross_check(acceptance_results):
    xor3, iid07 = xor3_spec(8), iid07_spec(8)
    got_x, want_x = _pi_hat(xor3, 3), analytics(xor3).pi_star[3]
    got_i, want_i = _pi_hat(iid07, 0), analytics(iid07).pi_star[0]
    ok = abs(got_x - want_x) <= 0.02 and abs(got_i - want_i) <= 0.02
    note(acceptance_results, 9, ok, f"xor3 pi_hat_3 {got_x:.4f} vs {want_x:.4f}; "
         f"iid07 pi_hat_0 {got_i:.4f} vs {want_i:.4f} (tol 0.02)")
    assert abs(got_x - want_x) <= 0.02
    assert abs(got_i - want_i) <= 0.02


def test_c10_complexity_scaling(acceptance_results):
    t10, t14, ratio = scaling_ratio(10, 14)
    ok = 8 <= ratio <= 40
    note(acceptance_results, 10, ok, f"predict {t10 * 1e6:.0f}us at D=10, {t14 * 1e6:.0f}us at D=14, "
         f"ratio {ratio:.1f} (band [8, 40])")
    assert ok


def main():
    """Run every criterion outside pytest and print one line each."""
    results = {}
    cache = {}

    def cached(build):
        def get():
            if build not in cache:
                cache[build] = build()
            return cache[build]
        return get

    xor3, iid, adv = cached(build_xor3_runs), cached(build_iid07_runs), cached(build_adversarial_run)
    checks = [
        (test_c1_oracle_equivalence, ()), (test_c2_per_round_invariants, (xor3, iid, adv)),
        (test_c3_inequality_suite, (xor3, iid, adv)), (test_c4_adversarial_rate, (adv,)),
        (test_c5_xor3_comparison, (xor3,)), (test_c6_stochastic_plateau, (xor3,)),
        (test_c6_adversarial_growth, (adv,)), (test_c7_iid_overfitting, (iid,)),
        (test_c8_model_order_sweep, ()), (test_c9_analytics_cross_check, ()),
        (test_c10_complexity_scaling, ()),
    ]
    for fn, deps in checks:
        try:
            fn(results, *(d() for d in deps))
        except AssertionError:
            pass
    for number in sorted(results):
        parts = results[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {text}" if name else text for name, _, text in parts)
        print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return 0 if all(p[1] for parts in results.values() for p in parts) else 1


if __name__ == "__main__":
    raise SystemExit(main())
