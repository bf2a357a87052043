import itertools
import math

import numpy as np
import pytest

import osr.learner as learner_mod
from osr.combinatorics import SubsetId, SubsetLex, colex_subsets
from osr.estimator import build_moments
from osr.hedge import surrogate_cost
from osr.learner import (
    BudgetExceeded,
    OsrConfig,
    OsrLearner,
    StreamExhausted,
    drive,
    play_round,
    run,
)
from osr.seeding import spawn_rngs
from osr.streams import LabeledExample, StochasticModel, random_sparse_weights, stochastic_stream, take, zero_stream


def scripted(monkeypatch, experts, extras):
    """Force the sampled expert and probe set in each round."""
    experts, extras = iter(experts), iter(extras)
    monkeypatch.setattr(learner_mod, "sample_expert", lambda dist, rng: SubsetId(next(experts), dist.d, dist.k))
    monkeypatch.setattr(
        learner_mod, "sample_uniform_subset", lambda d, r, rng: SubsetLex(next(extras), d, r)
    )


class RecordingVector:
    """Feature vector that remembers which coordinates were read."""

    def __init__(self, x):
        self.x = np.asarray(x, dtype=float)
        self.read = set()

    def __getitem__(self, i):
        self.read.add(int(i))
        return self.x[i]


class TestConfig:
    def test_scaled_rates(self):
        c = OsrConfig(3, 1, 3, 100)
        assert c.eta_sgd == pytest.approx(1 / 30, rel=1e-15)
        assert c.eta_hedge == pytest.approx(math.sqrt(math.log(3) / 100) / 3, rel=1e-15)

    def test_unit_rates(self):
        c = OsrConfig.with_rates(6, 2, 4, 400, rates="unit")
        assert c.eta_sgd == pytest.approx(0.05)
        assert c.eta_hedge == pytest.approx(math.sqrt(math.log(6)) / 20)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown rate preset"):
            OsrConfig.with_rates(6, 2, 4, 400, rates="fast")

    @pytest.mark.parametrize("args", [(3, 1, 2, 10), (3, 2, 4, 10), (3, 1, 3, -1), (3, 0, 3, 10)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            OsrConfig(*args)

    def test_nonpositive_override(self):
        with pytest.raises(ValueError, match="eta_sgd_override"):
            OsrConfig(3, 1, 3, 10, eta_sgd_override=0.0)


class TestHandTrace:
    def test_two_rounds(self, monkeypatch):
        scripted(monkeypatch, [0, 0], [(0, 1), (1, 2)])
        cfg = OsrConfig(3, 1, 3, 100)
        L = OsrLearner(cfg)

        r1 = play_round(L, np.array([0.5, 0.2, 0.0]), 1.0)
        assert r1.prediction == 0.0 and r1.loss == 1.0
        np.testing.assert_allclose(L.last_costs, [1.0, 1.0, 1.0], rtol=1e-15)
        np.testing.assert_allclose(L.dist.probabilities(), np.full(3, 1 / 3), rtol=1e-12)
        np.testing.assert_allclose(L.experts.table[:, 0], [0.05, 0.02, 0.0], rtol=1e-14, atol=0)

        r2 = play_round(L, np.array([0.5, 0.2, 0.1]), 0.5)
        assert r2.prediction == pytest.approx(0.025, rel=1e-14)
        assert r2.query_set.members == (0, 1, 2)
        np.testing.assert_allclose(L.last_costs, [0.25, 0.244024, 0.25], rtol=1e-12)
        np.testing.assert_allclose(L.experts.table[:, 0], [0.05, 0.02992, 0.005], rtol=1e-12, atol=0)

        eta = cfg.eta_hedge
        w = np.exp(-eta * np.array([1.25, 1.244024, 1.25]))
        np.testing.assert_allclose(L.dist.probabilities(), w / w.sum(), rtol=1e-12)

    def test_union_when_probe_covers_choice(self, monkeypatch):
        scripted(monkeypatch, [2], [(0, 2)])
        L = OsrLearner(OsrConfig(3, 1, 3, 10))
        assert L.begin_round().query_set.members == (0, 2)


class TestProtocol:
    def test_reads_only_query_set(self):
        rng = np.random.default_rng(0)
        L = OsrLearner(OsrConfig(8, 2, 5, 300, seed=1))
        for _ in range(300):
            x = rng.uniform(-1, 1, size=8) / math.sqrt(8)
            rv = RecordingVector(x)
            rec = play_round(L, rv, float(rng.uniform(-1, 1)))
            assert rv.read == set(rec.query_set.members)
            assert len(rv.read) <= 5

    def test_nan_outside_query_is_harmless(self):
        # poison every coordinate that is not revealed; any leak turns weights into NaN
        L = OsrLearner(OsrConfig(6, 2, 4, 500, seed=3))
        rng = np.random.default_rng(1)
        for _ in range(500):
            q = L.begin_round()
            x = np.full(6, np.nan)
            for i in q.query_set:
                x[i] = rng.uniform(-0.4, 0.4)
            x_probed = {i: float(x[i]) for i in q.query_set}
            L.predict(q, x_probed)
            L.finish_round(q, x_probed, float(rng.uniform(-1, 1)))
        assert np.isfinite(L.experts.table).all()
        assert np.isfinite(L.dist.log_weights).all()

    def test_query_size_bounds_exhaustive(self):
        d, k, kp = 6, 2, 4
        for S in itertools.combinations(range(d), k):
            for R in itertools.combinations(range(d), kp - k):
                u = set(S) | set(R)
                assert kp - k <= len(u) <= kp

    def test_query_size_bounds_sampled(self):
        L = OsrLearner(OsrConfig(6, 2, 4, 2000, seed=5))
        sizes = set()
        for ex in take(zero_stream(6), 2000):
            rec = play_round(L, ex.x, ex.y)
            sizes.add(len(rec.query_set))
            S = set(colex_subsets(6, 2)[rec.subset_rank])
            assert S <= set(rec.query_set.members)
        assert sizes <= {2, 3, 4} and 4 in sizes

    def test_budget_enforced(self):
        class Greedy:
            budget = 2

            def begin_round(self):
                return learner_mod.RoundQuery(None, None, SubsetLex((0, 1, 2), 6, 3))

        with pytest.raises(BudgetExceeded, match="budget is 2"):
            play_round(Greedy(), np.zeros(6), 0.0)

    def test_costs_use_pre_update_weights(self):
        rng = np.random.default_rng(2)
        L = OsrLearner(OsrConfig(5, 2, 5, 200, seed=0))
        for _ in range(200):
            x = rng.uniform(-1, 1, size=5) / math.sqrt(5)
            y = float(rng.uniform(-1, 1))
            before = L.experts.table.copy()
            q = L.begin_round()
            x_probed = {i: float(x[i]) for i in q.query_set}
            L.predict(q, x_probed)
            L.finish_round(q, x_probed, y)
            m = build_moments(x_probed, y, q.probe_extra.members, L.params)
            for n, S in enumerate(L.experts.members):
                w = np.zeros(5)
                w[S] = before[n]
                assert L.last_costs[n] == pytest.approx(surrogate_cost(w, m, y), rel=1e-12, abs=1e-12)

    def test_prediction_uses_chosen_subset(self):
        L = OsrLearner(OsrConfig(6, 2, 4, 50, seed=4))
        rng = np.random.default_rng(4)
        for ex in take(stochastic_stream(StochasticModel(np.array([0.5, 0, 0, 0.5, 0, 0])), rng), 50):
            q = L.begin_round()
            x_probed = {i: float(ex.x[i]) for i in q.query_set}
            n = q.chosen_expert.rank
            y_hat = L.predict(q, x_probed)
            assert y_hat == pytest.approx(float(L.experts.table[n] @ ex.x[L.experts.members[n]]), abs=1e-15)
            L.finish_round(q, x_probed, ex.y)

    def test_horizon(self):
        L = OsrLearner(OsrConfig(4, 1, 3, 2))
        for ex in take(zero_stream(4), 2):
            play_round(L, ex.x, ex.y)
        with pytest.raises(RuntimeError, match="horizon T=2"):
            L.begin_round()

    def test_zero_horizon(self):
        assert run(OsrConfig(4, 1, 3, 0), zero_stream(4)) == []

    def test_label_out_of_range(self):
        L = OsrLearner(OsrConfig(4, 1, 3, 5))
        with pytest.raises(ValueError, match="outside"):
            play_round(L, np.zeros(4), 1.5)

    def test_stream_exhausted(self):
        with pytest.raises(StreamExhausted, match="round 3 of 5"):
            run(OsrConfig(4, 1, 3, 5), [LabeledExample(np.zeros(4), 0.0)] * 2)


class TestBehaviour:
    def test_zero_stream_stays_at_zero(self):
        L = OsrLearner(OsrConfig(6, 2, 4, 300))
        records = list(drive(L, zero_stream(6), 300))
        assert all(r.loss == 0.0 and r.prediction == 0.0 for r in records)
        assert not L.experts.table.any()
        np.testing.assert_allclose(L.dist.probabilities(), np.full(15, 1 / 15), rtol=1e-12)

    def test_deterministic(self):
        def once():
            s_rng, l_rng = spawn_rngs(11, 2)
            model = StochasticModel(random_sparse_weights(7, 2, np.random.default_rng(0)), 0.05)
            L = OsrLearner(OsrConfig(7, 2, 5, 400), l_rng)
            return [(r.prediction, r.query_set.members) for r in drive(L, stochastic_stream(model, s_rng), 400)]

        assert once() == once()

    def test_learns_sparse_model(self):
        s_rng, l_rng = spawn_rngs(7, 2)
        truth = random_sparse_weights(6, 1, np.random.default_rng(1))
        model = StochasticModel(truth)
        T = 20_000
        L = OsrLearner(OsrConfig.with_rates(6, 1, 3, T, rates="unit"), l_rng)
        losses = np.array([r.loss for r in drive(L, stochastic_stream(model, s_rng), T)])
        support = int(np.flatnonzero(truth)[0])
        assert losses[-2000:].mean() < 0.25 * losses[:2000].mean()
        assert np.argmax(L.dist.probabilities()) == support
