import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctahedge import ConfigurationError, UsageError, make_prior, predict
from ctahedge.baselines import fixed_eta_predict, ftl_predict
from ctahedge.context_stats import new_table
from ctahedge.forecaster import ContextTreeAdaHedge
from ctahedge.oracle import (
    NaiveEnsemble,
    TreeExpert,
    equivalence_check,
    naive_predict,
    naive_record,
    order_of,
)


class TestOrders:
    def test_constant(self):
        assert order_of(TreeExpert(2, (0, 0, 0, 0))) == 0

    def test_most_recent_bit(self):
        # key bit 0 is the most recent covariate
        assert order_of(TreeExpert(2, (0, 1, 0, 1))) == 1

    def test_oldest_bit(self):
        assert order_of(TreeExpert(2, (0, 0, 1, 1))) == 2

    @pytest.mark.parametrize("depth", [0, 1, 2, 3])
    def test_order_histogram(self, depth):
        ens = NaiveEnsemble(depth, make_prior("uniform", depth))
        assert ens.n_experts == 2 ** (2 ** depth)
        counts = np.bincount(ens.orders, minlength=depth + 1)
        assert np.cumsum(counts).tolist() == [2 ** (2 ** d) for d in range(depth + 1)]

    def test_vectorized_orders_match_scalar(self):
        ens = NaiveEnsemble(2, make_prior("uniform", 2))
        assert ens.orders.tolist() == [order_of(ens.expert(i)) for i in range(16)]


class TestNaive:
    @pytest.mark.parametrize("kind", ["uniform", "proportional"])
    def test_initial_prediction(self, kind):
        for d in (1, 2):
            assert naive_predict(NaiveEnsemble(d, make_prior(kind, d)), 0, math.inf) == (0.5, 0.5)

    def test_constant_expert_loss(self):
        ens = NaiveEnsemble(1, make_prior("uniform", 1))
        for y in (0, 0, 1):
            naive_record(ens, 0, y)
        assert ens.cum_loss[0] == 1  # index 0 is the constant-0 expert

    def test_complements_sum_to_t(self):
        ens = NaiveEnsemble(2, make_prior("uniform", 2))
        for k, y in [(0, 1), (3, 0), (2, 0), (1, 1), (1, 1)]:
            naive_record(ens, k, y)
        assert np.all(ens.cum_loss + ens.cum_loss[::-1] == 5)

    @pytest.mark.parametrize("kind", ["uniform", "proportional"])
    def test_prior_mass(self, kind):
        prior = make_prior(kind, 2)
        ens = NaiveEnsemble(2, prior)
        w = ens.tree_weights(1.0)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        # mass on experts of order <= d equals sum_{h} g(h) * 2^{2^min(h,d)} / Z
        g, z = prior.g, math.exp(prior.log_Z)
        for d in range(3):
            expected = sum(g[h] * 2 ** (2 ** min(h, d)) for h in range(3)) / z
            assert w[ens.orders <= d].sum() == pytest.approx(expected, abs=1e-14)
        ens.cum_loss[:] = np.arange(16)
        assert ens.tree_weights(2.0).sum() == pytest.approx(1.0, abs=1e-14)

    def test_depth_guard(self):
        with pytest.raises(ConfigurationError):
            NaiveEnsemble(5, make_prior("uniform", 5))
        with pytest.raises(ConfigurationError):
            equivalence_check(4, "uniform")


@pytest.mark.parametrize("depth,kind,table", [
    (1, "uniform", None), (3, "proportional", None), (2, "custom", (1, 1, 1)), (0, "uniform", None),
])
def test_equivalence_examples(depth, kind, table):
    prior = make_prior(kind, depth, table)
    assert equivalence_check(depth, prior, 50, seed=1) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.tuples(
    st.just(d), st.lists(st.tuples(st.integers(0, (1 << d) - 1), st.integers(0, 1)), min_size=1, max_size=50),
    st.lists(st.floats(0.0, 4.0), min_size=d + 1, max_size=d + 1).filter(lambda g: sum(g) > 0))))
def test_equivalence_arbitrary_sequences_and_priors(data):
    depth, seq, table = data
    assert equivalence_check(depth, make_prior("custom", depth, table), len(seq), sequence=seq) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1)), max_size=30), st.floats(0.05, 30.0))
def test_fixed_rate_matches_naive(seq, eta):
    prior = make_prior("proportional", 2)
    stats, ens = new_table(2), NaiveEnsemble(2, prior)
    for k, y in seq:
        stats.record(k, y)
        naive_record(ens, k, y)
    for k in range(4):
        a, b = fixed_eta_predict(stats, k, eta, prior), naive_predict(ens, k, eta)
        assert abs(a.w0 - b.w0) <= 1e-9


class TestFTL:
    def make(self, loss0, loss1):
        stats = new_table(1)
        for _ in range(loss0):
            stats.record(1, 1)
        for _ in range(loss1):
            stats.record(1, 0)
        return stats

    def test_smaller_loss_side(self):
        assert ftl_predict(self.make(2, 5), 1, 1) == (1.0, 0.0)
        assert ftl_predict(self.make(5, 2), 1, 1) == (0.0, 1.0)

    def test_ties(self):
        assert ftl_predict(self.make(3, 3), 1, 1) == (0.5, 0.5)
        assert ftl_predict(self.make(3, 3), 1, 1, ties="zero") == (1.0, 0.0)
        assert ftl_predict(self.make(3, 3), 0, 1) == (0.5, 0.5)  # unseen context

    def test_guards(self):
        with pytest.raises(UsageError):
            ftl_predict(new_table(1), 0, 2)
        with pytest.raises(UsageError):
            ftl_predict(new_table(1), 0, 1, ties="coin")

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 1)), max_size=30), st.integers(0, 2))
    def test_output_masses(self, seq, h):
        stats = new_table(2)
        for k, y in seq:
            stats.record(k, y)
        for k in range(4):
            assert set(ftl_predict(stats, k, h)) <= {0.0, 0.5, 1.0}


class TestFixedEta:
    def test_same_as_forecaster(self):
        stats = new_table(2)
        for k, y in [(0, 1), (1, 1), (3, 0)]:
            stats.record(k, y)
        prior = make_prior("proportional", 2)
        assert fixed_eta_predict(stats, 2, 1.0, prior) == predict(stats, 2, 1.0, prior)

    def test_empty_table(self):
        assert fixed_eta_predict(new_table(2), 0, 1.0, make_prior("uniform", 2)) == (0.5, 0.5)

    def test_after_one_round_matches_naive(self):
        prior = make_prior("proportional", 2)
        stats, ens = new_table(2), NaiveEnsemble(2, prior)
        stats.record(2, 1)
        naive_record(ens, 2, 1)
        for k in range(4):
            assert fixed_eta_predict(stats, k, 1.0, prior).w1 == pytest.approx(naive_predict(ens, k, 1.0).w1, abs=1e-12)

    @pytest.mark.parametrize("eta", [0.0, -1.0, math.inf])
    def test_rate_guard(self, eta):
        with pytest.raises(UsageError):
            fixed_eta_predict(new_table(1), 0, eta, make_prior("uniform", 1))

    def test_replays_forecaster_rate_trace(self):
        rng = np.random.default_rng(9)
        prior = make_prior("uniform", 3)
        alg = ContextTreeAdaHedge(3, prior)
        for k, y in zip(rng.integers(0, 8, 60).tolist(), rng.integers(0, 2, 60).tolist()):
            if math.isfinite(alg.eta):
                assert fixed_eta_predict(alg.stats, k, alg.eta, prior) == alg.predict(k)
            alg.update(k, y)
