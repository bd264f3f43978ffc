import math

import numpy as np
import pytest

from cusumkit import models, moments, rng, simulate
from cusumkit.errors import (
    HorizonExceeded,
    InsufficientReps,
    StateBudgetExceeded,
)

BERN_LLR_P = 1.0 / (1.0 + math.e)


@pytest.fixture(scope="module")
def nllr():
    return models.NormalLLR(1.0)


class TestSubstreams:
    def test_offset_slices_are_consistent(self):
        whole = rng.uniform_block(seed=9, first_rep=0, reps=20, draws_per_rep=11)
        tail = rng.uniform_block(seed=9, first_rep=8, reps=12, draws_per_rep=11)
        np.testing.assert_array_equal(whole[8:], tail)

    def test_seeds_differ(self):
        a = rng.uniform_block(1, 0, 4, 16)
        b = rng.uniform_block(2, 0, 4, 16)
        assert not np.array_equal(a, b)

    def test_uniforms_in_open_interval(self):
        u = rng.uniform_block(3, 0, 100, 64)
        assert np.all(u > 0.0) and np.all(u < 1.0)

    def test_substream_matches_block(self):
        block = rng.uniform_block(7, 0, 5, 10)
        gen = rng.substream(7, 3, 10)
        np.testing.assert_array_equal(
            np.maximum(gen.random(10), 2.0**-64), block[3]
        )


class TestDeterminism:
    def test_parallel_streams_bit_identical(self, nllr):
        r1 = simulate.simulate_cusum(simulate.SimConfig(nllr, 37, 500, seed=11))
        r4 = simulate.simulate_cusum(
            simulate.SimConfig(nllr, 37, 500, seed=11, parallel_streams=4)
        )
        np.testing.assert_array_equal(r1.w_final, r4.w_final)
        np.testing.assert_array_equal(r1.w_max, r4.w_max)

    def test_chunking_bit_identical(self, nllr, monkeypatch):
        cfg = simulate.SimConfig(nllr, 37, 500, seed=11)
        big = simulate.simulate_cusum(cfg)
        monkeypatch.setattr(simulate, "_TARGET_CHUNK_ELEMENTS", 100)
        small = simulate.simulate_cusum(cfg)
        np.testing.assert_array_equal(big.w_final, small.w_final)
        np.testing.assert_array_equal(big.w_max, small.w_max)

    def test_discrete_sampling_deterministic(self):
        m = models.BernoulliPM(0.3)
        a = simulate.simulate_cusum(simulate.SimConfig(m, 20, 100, seed=5))
        b = simulate.simulate_cusum(simulate.SimConfig(m, 20, 100, seed=5))
        np.testing.assert_array_equal(a.w_final, b.w_final)


class TestAgainstAnalytic:
    def test_normal_mean_within_stderr(self, nllr):
        res = simulate.simulate_cusum(simulate.SimConfig(nllr, 50, 40_000, seed=3))
        exact = moments.cusum_mean(nllr, 50)[50]
        assert abs(res.mean - exact) <= 4 * res.mean_stderr

    def test_exp_moment_estimate(self):
        m = models.NormalLLR(0.5)
        res = simulate.simulate_cusum(
            simulate.SimConfig(m, 30, 40_000, seed=13), exp_lam=1.0
        )
        exact = moments.cusum_mgf_recursive(m, 1.0, 30).values[30]
        assert abs(res.exp_moment - exact) <= 4 * res.exp_moment_stderr

    def test_invalid_config(self, nllr):
        with pytest.raises(ValueError):
            simulate.SimConfig(nllr, 10, 0, seed=0)
        with pytest.raises(ValueError):
            simulate.SimConfig(nllr, -1, 10, seed=0)


class TestQuantiles:
    def test_order_statistic_convention(self):
        samples = np.arange(1.0, 101.0)  # 1..100
        h, stderr = simulate._upper_quantile(samples, alpha=0.05)
        assert h == 95.0  # ceil(100*0.95) = 95th order statistic
        assert stderr > 0.0

    def test_insufficient_reps_guard(self, nllr):
        with pytest.raises(InsufficientReps):
            simulate.mc_quantile_max(nllr, 10, 0.05, reps=100, seed=0)

    def test_quantile_reproducible(self, nllr):
        a = simulate.mc_quantile_max(nllr, 50, 0.05, 5000, seed=21)
        b = simulate.mc_quantile_max(nllr, 50, 0.05, 5000, seed=21)
        assert a == b


class TestExactEnumeration:
    @pytest.mark.filterwarnings("ignore::cusumkit.errors.FormulaMismatch")
    @pytest.mark.parametrize(
        "model",
        [
            models.BernoulliPM(BERN_LLR_P),
            models.DiscreteTable((1.0, -0.5, -2.0), (0.25, 0.5, 0.25)),
        ],
        ids=["bernoulli", "table3"],
    )
    def test_matches_moment_engine(self, model):
        n = 10
        dist = simulate.exact_enumerate(model, n)
        assert dist.total() == pytest.approx(1.0, abs=1e-12)
        assert dist.mean_w() == pytest.approx(
            moments.cusum_mean(model, n)[n], abs=1e-12
        )
        vars_, _ = moments.cusum_variance(model, n)
        assert dist.var_w() == pytest.approx(vars_[n], abs=1e-12)
        mgf = moments.cusum_mgf_recursive(model, 1.0, n).values[n]
        assert dist.mgf_w(1.0) == pytest.approx(mgf, rel=1e-12)

    def test_tail_against_simulation(self):
        m = models.BernoulliPM(0.3)
        n, h = 30, 3.0
        dist = simulate.exact_enumerate(m, n)
        p_exact = dist.prob_max_ge(h)
        p_hat, ci = simulate.mc_tail_max(m, n, h, reps=40_000, seed=17)
        assert abs(p_hat - p_exact) <= max(ci, 1e-3)

    def test_budget_guard(self):
        m = models.DiscreteTable((0.1, -0.317), (0.6, 0.4))
        with pytest.raises(StateBudgetExceeded):
            simulate.exact_enumerate(m, 40, state_budget=100)

    def test_continuous_rejected(self, nllr):
        with pytest.raises(TypeError):
            simulate.exact_enumerate(nllr, 5)


class TestStoppingStats:
    def test_requires_negative_drift(self):
        with pytest.raises(ValueError):
            simulate.stopping_stats(
                models.ShiftedNormal(0.2, 1.0), h=2.0, k_zeros=1, reps=10, seed=0
            )

    def test_estimates_are_sane(self):
        m = models.ShiftedNormal(-1.0, 1.0)
        stats = simulate.stopping_stats(m, h=3.0, k_zeros=3, reps=400, seed=5)
        assert 0.0 <= stats.p_hat <= 1.0
        assert stats.mean_tau1 >= 1.0
        assert stats.horizon_exceeded == 0

    def test_horizon_warning(self):
        m = models.ShiftedNormal(-0.01, 1.0)  # long excursions
        with pytest.warns(HorizonExceeded):
            simulate.stopping_stats(
                m, h=50.0, k_zeros=1, reps=5, seed=1, max_steps=50, block=16
            )
