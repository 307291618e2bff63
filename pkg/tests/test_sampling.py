import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volsample import fixtures, linalg, sampling
from volsample.errors import AllWeightsZero, InvalidConfig, NotPositiveDefinite
from volsample.sampling import SamplerConfig


class TestSamplerConfig:
    def test_unregularized_needs_s_at_least_d(self):
        with pytest.raises(InvalidConfig):
            SamplerConfig(s=1).validate(n=5, d=2)

    def test_unregularized_needs_s_at_most_n(self):
        with pytest.raises(InvalidConfig):
            SamplerConfig(s=6).validate(n=5, d=2)

    def test_regularized_allows_small_s(self):
        SamplerConfig(s=1, lam=0.5).validate(n=5, d=3)

    def test_leverage_allows_zero(self):
        SamplerConfig(s=0, algorithm="leverage").validate(n=5, d=2)

    def test_unknown_algorithm(self):
        with pytest.raises(InvalidConfig):
            SamplerConfig(s=2, algorithm="sobol").validate(n=5, d=2)


class TestRemovalWeights:
    def test_degenerate_weights(self, degenerate):
        state = sampling.init_downdate_state(degenerate.X)
        h = sampling.removal_weights(state, degenerate.X)
        np.testing.assert_allclose(h, [0.5, 0.5, 0.0], atol=1e-12)
        # s - d = 1, so the conditional equals h itself
        np.testing.assert_allclose(h / h.sum(), [0.5, 0.5, 0.0], atol=1e-12)

    def test_square_identity_all_zero(self):
        state = sampling.init_downdate_state(np.eye(2))
        with pytest.raises(AllWeightsZero):
            sampling.removal_weights(state, np.eye(2))

    def test_large_lambda_uniformizes(self):
        X = fixtures.gaussian_matrix(6, 2, seed=0)
        state = sampling.init_downdate_state(X, lam=1e9)
        h = sampling.removal_weights(state, X)
        np.testing.assert_allclose(h, np.ones(6), atol=1e-6)

    def test_rank_deficient_unregularized_raises(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(NotPositiveDefinite):
            sampling.init_downdate_state(X)


class TestDowndateStateInvariants:
    @settings(max_examples=20)
    @given(st.integers(0, 5000), st.sampled_from([0.0, 0.3, 2.0]))
    def test_maintained_weights_match_fresh(self, seed, lam):
        X = fixtures.gaussian_matrix(12, 3, seed=seed)
        state = sampling.init_downdate_state(X, lam)
        rng = np.random.default_rng(seed)
        floor = 3 if lam == 0.0 else 1
        while state.size > floor:
            pos = sampling._pick_weighted(state.h[: state.size], rng)
            sampling.remove_row(state, pos)
            act = state.active[: state.size]
            fresh = 1.0 - linalg.quad_forms(
                X[act], linalg.inv_spd(linalg.gram(X[act], lam)))
            np.testing.assert_allclose(state.h[: state.size],
                                       np.clip(fresh, 0.0, 1.0), atol=1e-8)

    @settings(max_examples=20)
    @given(st.integers(0, 5000), st.sampled_from([0.0, 0.5, 3.0]))
    def test_weight_sum_normalization(self, seed, lam):
        # sum of weights = |S| - d + lam * tr(Z) at every step
        X = fixtures.gaussian_matrix(10, 3, seed=seed)
        state = sampling.init_downdate_state(X, lam)
        rng = np.random.default_rng(seed)
        floor = 3 if lam == 0.0 else 1
        while state.size > floor:
            expected = state.size - 3 + lam * np.trace(state.Z)
            assert state.h[: state.size].sum() == pytest.approx(expected, abs=1e-8)
            pos = sampling._pick_weighted(state.h[: state.size], rng)
            sampling.remove_row(state, pos)

    def test_weights_stay_in_unit_interval(self):
        X = fixtures.gaussian_matrix(30, 4, seed=7)
        state = sampling.init_downdate_state(X)
        rng = np.random.default_rng(3)
        while state.size > 4:
            h = state.h[: state.size]
            assert np.all(h >= 0.0) and np.all(h <= 1.0 + 1e-12)
            sampling.remove_row(state, sampling._pick_weighted(h, rng))


class TestRegVol:
    def test_full_size_is_identity(self, gauss83):
        smp = sampling.reg_vol_sample(gauss83, SamplerConfig(s=8, seed=0))
        assert smp.indices == tuple(range(8))
        assert smp.removal_order == ()

    def test_zero_probability_pair_never_sampled(self, degenerate):
        for seed in range(500):
            smp = sampling.reg_vol_sample(degenerate.X, SamplerConfig(s=2, seed=seed))
            assert smp.indices != (0, 1)

    def test_seed_determinism(self, gauss83):
        cfg = SamplerConfig(s=4, seed=123456789)
        a = sampling.reg_vol_sample(gauss83, cfg)
        b = sampling.reg_vol_sample(gauss83, cfg)
        assert a == b and repr(a) == repr(b)

    def test_different_seeds_differ_somewhere(self, gauss83):
        draws = {sampling.reg_vol_sample(gauss83, SamplerConfig(s=4, seed=s)).indices
                 for s in range(40)}
        assert len(draws) > 1

    def test_removal_order_complements_subset(self, gauss83):
        smp = sampling.reg_vol_sample(gauss83, SamplerConfig(s=3, seed=5))
        assert sorted(smp.indices + smp.removal_order) == list(range(8))

    def test_uniform_symmetric_case(self):
        # all-ones single column: every pair equally likely (prob 1/3 each)
        X = np.ones((3, 1))
        counts = {}
        for seed in range(3000):
            smp = sampling.reg_vol_sample(X, SamplerConfig(s=2, seed=seed))
            counts[smp.indices] = counts.get(smp.indices, 0) + 1
        assert set(counts) == {(0, 1), (0, 2), (1, 2)}
        expected = 1000.0
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < 16.0  # df=2


class TestFastRegVol:
    def test_full_size_no_trials(self, gauss83):
        cfg = SamplerConfig(s=8, seed=0, algorithm="fastregvol")
        smp = sampling.fast_reg_vol_sample(gauss83, cfg)
        assert smp.indices == tuple(range(8))
        assert smp.rejection_trials == 0

    def test_seed_determinism(self, gauss83):
        cfg = SamplerConfig(s=3, seed=77, algorithm="fastregvol")
        a = sampling.fast_reg_vol_sample(gauss83, cfg)
        b = sampling.fast_reg_vol_sample(gauss83, cfg)
        assert a == b

    def test_records_trials_above_cutoff(self):
        X = fixtures.gaussian_matrix(40, 3, seed=1)
        cfg = SamplerConfig(s=3, seed=9, algorithm="fastregvol")
        smp = sampling.fast_reg_vol_sample(X, cfg)
        # 34 removals happen in the rejection phase (down to 2d=6 rows)
        assert smp.rejection_trials >= 34
        assert len(smp.indices) == 3

    def test_zero_probability_pair_never_sampled(self, degenerate):
        for seed in range(500):
            cfg = SamplerConfig(s=2, seed=seed, algorithm="fastregvol")
            assert sampling.fast_reg_vol_sample(degenerate.X, cfg).indices != (0, 1)


class TestLeverageIID:
    def test_identity_design_uniform(self):
        smp = sampling.leverage_iid_sample(np.eye(3), s=2000, seed=0)
        counts = np.bincount(smp.indices, minlength=3) / 2000
        assert np.max(np.abs(counts - 1 / 3)) < 4 * np.sqrt((1 / 3) * (2 / 3) / 2000)

    def test_degenerate_draw_distribution(self, degenerate):
        smp = sampling.leverage_iid_sample(degenerate.X, s=20000, seed=1)
        counts = np.bincount(smp.indices, minlength=3) / 20000
        for i, p in enumerate([0.25, 0.25, 0.5]):
            assert abs(counts[i] - p) < 4 * np.sqrt(p * (1 - p) / 20000)

    def test_empty_multiset(self, gauss83):
        smp = sampling.leverage_iid_sample(gauss83, s=0, seed=0)
        assert smp.indices == () and smp.multiset

    def test_importance_weights(self, degenerate):
        smp = sampling.leverage_iid_sample(degenerate.X, s=4, seed=3)
        p = np.array([0.25, 0.25, 0.5])
        for idx, w in zip(smp.indices, smp.importance_weights):
            assert w == pytest.approx(1.0 / np.sqrt(4 * p[idx]))


class TestMarginals:
    def test_full_size(self, gauss83):
        np.testing.assert_allclose(sampling.marginal_probabilities(gauss83, 8),
                                   np.ones(8))

    def test_size_d_equals_leverage(self, gauss83):
        np.testing.assert_allclose(sampling.marginal_probabilities(gauss83, 3),
                                   linalg.leverage_scores(gauss83), atol=1e-12)

    def test_degenerate_matches_enumeration(self, degenerate):
        assert sampling.marginal_probability(degenerate.X, 2, 0) == pytest.approx(0.5)
        assert sampling.marginal_probability(degenerate.X, 2, 2) == pytest.approx(1.0)

    def test_marginals_sum_to_s(self, gauss83):
        for s in range(3, 9):
            assert sampling.marginal_probabilities(gauss83, s).sum() == \
                pytest.approx(s, abs=1e-10)


class TestDispatch:
    def test_sample_routes_by_algorithm(self, gauss83):
        for alg in ("regvol", "fastregvol", "leverage"):
            smp = sampling.sample(gauss83, SamplerConfig(s=3, seed=1, algorithm=alg))
            assert smp.algorithm == alg

    def test_regularized_below_d(self, gauss83):
        smp = sampling.sample(gauss83, SamplerConfig(s=2, lam=0.5, seed=1))
        assert len(smp.indices) == 2
