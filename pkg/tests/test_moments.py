import math

import numpy as np
import pytest

from cusumkit import models, moments
from cusumkit.errors import FormulaMismatch, TooLarge
from cusumkit.special import norm_cdf

from _oracles import path_mean_var_mgf

BERN_LLR_P = 1.0 / (1.0 + math.e)


@pytest.fixture(scope="module")
def nllr():
    return models.NormalLLR(1.0)


class TestHandValues:
    def test_first_two_exp_moments_delta_one(self, nllr):
        # M_1(1) = E e^{max(Y,0)} = 2*Phi(delta/2) for the llr increment
        vals = moments.cusum_mgf_recursive(nllr, 1.0, 2).values
        m1 = 2.0 * float(norm_cdf(0.5))
        assert vals[0] == 1.0
        assert vals[1] == pytest.approx(m1, rel=1e-14)
        # M_2 = (x_1^2 + x_2) / 2 with x_2 = 2*Phi(delta*sqrt(2)/2)
        x2 = 2.0 * float(norm_cdf(math.sqrt(2) / 2))
        assert vals[2] == pytest.approx((m1**2 + x2) / 2.0, rel=1e-14)

    def test_first_mean_is_rectified_increment_mean(self, nllr):
        means = moments.cusum_mean(nllr, 1)
        m1, _ = nllr.rectified_moment_seq(1)
        assert means[1] == m1[0]

    def test_first_variance_is_rectified_increment_variance(self, nllr):
        vars_, _ = moments.cusum_variance(nllr, 1)
        m1, m2 = nllr.rectified_moment_seq(1)
        assert vars_[1] == pytest.approx(m2[0] - m1[0] ** 2, rel=1e-14)


@pytest.mark.filterwarnings("ignore::cusumkit.errors.FormulaMismatch")
class TestPathEnumerationOracle:
    @pytest.mark.parametrize(
        "model",
        [
            models.BernoulliPM(BERN_LLR_P),
            models.DiscreteTable((1.0, -0.5, -2.0), (0.25, 0.5, 0.25)),
        ],
        ids=["bernoulli", "table3"],
    )
    @pytest.mark.parametrize("n", [1, 2, 4, 7])
    def test_mean_var_mgf_match_exhaustive_paths(self, model, n):
        want_mean, want_var, want_mgf = path_mean_var_mgf(
            model.support, model.probs, n, lam=1.0
        )
        assert moments.cusum_mean(model, n)[n] == pytest.approx(
            want_mean, rel=1e-12
        )
        vars_, _ = moments.cusum_variance(model, n)
        assert vars_[n] == pytest.approx(want_var, rel=1e-12)
        got_mgf = moments.cusum_mgf_recursive(model, 1.0, n).values[n]
        assert got_mgf == pytest.approx(want_mgf, rel=1e-12)


class TestCrossMethodIdentity:
    @pytest.mark.parametrize("delta", [0.1, 1.0, 5.0])
    @pytest.mark.parametrize("lam", [0.5, 1.0])
    def test_recursive_matrix_partitions_bell_agree(self, delta, lam):
        m = models.NormalLLR(delta)
        n = 12
        rec = moments.cusum_mgf_recursive(m, lam, n).values
        mat = moments.cusum_mgf_matrix(m, lam, n).values
        np.testing.assert_allclose(mat, rec, rtol=1e-12)
        part = moments.cusum_mgf_partitions(m, lam, n)
        assert part == pytest.approx(rec[n], rel=1e-12)
        bell = moments.rescaled_bell(m.rectified_exp_seq(lam, n))
        np.testing.assert_allclose(bell, rec, rtol=1e-13)

    def test_partition_guard(self, nllr):
        with pytest.raises(TooLarge):
            moments.cusum_mgf_partitions(nllr, 1.0, 13)

    def test_zero_horizon(self, nllr):
        assert moments.cusum_mgf_recursive(nllr, 1.0, 0).values.tolist() == [1.0]
        assert moments.cusum_mgf_matrix(nllr, 1.0, 0).values.tolist() == [1.0]
        assert moments.cusum_mean(nllr, 0).tolist() == [0.0]


class TestVarianceRecursionDiagnostic:
    def test_mismatch_warning_and_direct_values(self, nllr):
        with pytest.warns(FormulaMismatch):
            vars_, gap = moments.cusum_variance(nllr, 10)
        assert gap > 1e-3
        # the gap appears already at n = 1: the recursion adds (E Y+)^2
        m1, m2 = nllr.rectified_moment_seq(1)
        with pytest.warns(FormulaMismatch):
            one, gap1 = moments.cusum_variance(nllr, 1)
        assert one[1] == pytest.approx(m2[0] - m1[0] ** 2, rel=1e-13)
        assert gap1 == pytest.approx(m1[0] ** 2, rel=1e-10)

    def test_moment_table_is_quiet(self, nllr):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            table = moments.moment_table(nllr, 10)
        assert table.recursion_gap > 0.0
        assert np.all(np.diff(table.means) > 0)


class TestAsymptote:
    def test_slope_matches_empirical_growth(self, nllr):
        slope, intercept = moments.asymptote_slope(nllr)
        vals = moments.cusum_mgf_recursive(nllr, 1.0, 400).values
        emp = (vals[400] - vals[300]) / 100.0
        assert slope == pytest.approx(emp, rel=1e-3)
        assert vals[400] == pytest.approx(slope * 400 + intercept, rel=1e-3)

    def test_slope_positive_and_below_discrepancy(self):
        for delta in (0.5, 1.0, 2.0):
            m = models.NormalLLR(delta)
            slope, _ = moments.asymptote_slope(m)
            assert 0.0 < slope < m.tv_discrepancy()
