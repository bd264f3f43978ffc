import math

import pytest

from cusumkit import bounds, models, moments, simulate
from cusumkit.errors import (
    InvalidAlpha,
    NotSupportedModel,
    UnstableQueue,
)


@pytest.fixture(scope="module")
def nllr():
    return models.NormalLLR(1.0)


class TestSandwich:
    @pytest.mark.parametrize(
        "model",
        [
            models.NormalLLR(0.5),
            models.NormalLLR(2.0),
            models.ShiftedNormal(-0.5, 1.0),
            models.BernoulliPM(1.0 / (1.0 + math.e)),
        ],
        ids=["llr-half", "llr-two", "shifted", "bernoulli"],
    )
    def test_critical_moment_between_one_and_linear_caps(self, model):
        lam_star = models.cached_lambda_star(model)
        n = 200
        vals = moments.cusum_mgf_recursive(model, lam_star, n).values
        for k in range(n + 1):
            upper = bounds.exp_moment_upper(model, k)
            assert 1.0 <= vals[k] <= upper + 1e-12
            assert upper <= k + 1.0 + 1e-12

    def test_tail_upper_clamped(self, nllr):
        assert bounds.max_tail_upper(nllr, 1000, 0.0) == 1.0
        assert 0.0 < bounds.max_tail_upper(nllr, 100, 10.0) < 1.0


class TestUpperThresholds:
    def test_ub2_closed_form(self, nllr):
        got = bounds.threshold_ub(nllr, 500, 0.05, "ub2")
        assert got == pytest.approx(math.log(501 / 0.05), rel=1e-14)

    def test_ordering_ub1_ub3_ub2(self):
        for delta in (0.25, 1.0, 3.0):
            m = models.NormalLLR(delta)
            for n in (10, 200):
                u1 = bounds.threshold_ub(m, n, 0.05, "ub1")
                u3 = bounds.threshold_ub(m, n, 0.05, "ub3")
                u2 = bounds.threshold_ub(m, n, 0.05, "ub2")
                assert u1 <= u3 + 1e-12 <= u2 + 1e-12

    def test_general_model_rescaled_by_lambda_star(self):
        m = models.ShiftedNormal(-0.5, 1.0)
        lam_star = models.cached_lambda_star(m)
        got = bounds.threshold_ub(m, 100, 0.05, "ub2")
        assert got == pytest.approx(math.log(101 / 0.05) / lam_star, rel=1e-13)

    def test_alpha_validated(self, nllr):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(InvalidAlpha):
                bounds.threshold_ub(nllr, 10, bad, "ub2")
        with pytest.raises(ValueError):
            bounds.threshold_ub(nllr, 10, 0.05, "ub9")


class TestLowerThresholds:
    def test_lb1_dominates_lb2(self, nllr):
        detail = bounds.lower_bound_detail(nllr, 500, 0.05)
        assert detail.lb1 >= detail.lb2
        assert 1 <= detail.k1 <= 500
        assert detail.lb1 >= detail.lb_at_fixed_point - 1e-12

    def test_fixed_point_solves_equation(self, nllr):
        n = 500
        detail = bounds.lower_bound_detail(nllr, n, 0.05)
        x = detail.fixed_point_k
        d = nllr.delta
        assert x * math.exp((x + d**2 / 2) ** 2 / (2 * d**2)) == pytest.approx(
            n, rel=1e-9
        )

    def test_normal_only(self):
        with pytest.raises(NotSupportedModel):
            bounds.threshold_lb(models.BernoulliPM(0.2), 100, 0.05, "lb1")

    def test_variant_names(self, nllr):
        with pytest.raises(ValueError):
            bounds.threshold_lb(nllr, 10, 0.05, "lb9")


class TestTailLowerEnvelope:
    def test_monotone_in_h_and_valid_range(self, nllr):
        p4 = bounds.max_tail_lower(nllr, 500, 4.0, 5)
        p6 = bounds.max_tail_lower(nllr, 500, 6.0, 5)
        assert 0.0 < p6 < p4 < 1.0

    def test_consistent_with_threshold_inversion(self, nllr):
        # solving 1 - Phi^{n//k}(..) = alpha at k gives the segment bound
        n, alpha, k = 500, 0.05, 7
        h = bounds._segment_lower_bound(nllr.delta, n, alpha, k)
        assert bounds.max_tail_lower(nllr, n, h, k) == pytest.approx(
            alpha, rel=1e-10
        )

    def test_k_validated(self, nllr):
        with pytest.raises(ValueError):
            bounds.max_tail_lower(nllr, 10, 2.0, 0)
        with pytest.raises(NotSupportedModel):
            bounds.max_tail_lower(models.BernoulliPM(0.2), 10, 2.0, 1)


class TestRegimes:
    def test_classification(self, nllr):
        sub = bounds.regime(nllr, 0.5)
        assert sub.kind == "subcritical" and sub.omega == pytest.approx(0.5)
        crit = bounds.regime(nllr, 1.0)
        assert crit.kind == "critical"
        sup = bounds.regime(nllr, 1.5)
        assert sup.kind == "supercritical"
        assert sup.growth == pytest.approx(nllr.mgf(1.5), rel=1e-14)

    def test_negative_lambda_rejected(self, nllr):
        with pytest.raises(ValueError):
            bounds.regime(nllr, -0.1)


class TestStoppedAndQueueBounds:
    def test_stopped_bound_formula(self):
        d, et, h = 0.3, 20.0, 8.0
        want = (1 + d * et) * math.exp(-h)
        assert bounds.stopped_tail_bound(d, et, h) == pytest.approx(want)
        assert bounds.stopped_tail_bound(0.9, 1e6, 0.1) == 1.0

    def test_stopped_bound_validation(self):
        with pytest.raises(ValueError):
            bounds.stopped_tail_bound(1.5, 10.0, 1.0)
        with pytest.raises(ValueError):
            bounds.stopped_tail_bound(0.5, -1.0, 1.0)

    def test_queue_requires_negative_drift(self):
        with pytest.raises(UnstableQueue):
            bounds.queue_tail_bound(models.ShiftedNormal(0.1, 1.0), 10, 5.0)

    def test_queue_bound_covers_simulation(self):
        # waiting-time tail: MC estimate must sit below the analytic bound
        m = models.ShiftedNormal(-0.5, 1.0)
        n, h = 200, 5.0
        bound = bounds.queue_tail_bound(m, n, h)
        p_hat, ci = simulate.mc_tail_max(m, n, h, reps=20_000, seed=42)
        assert p_hat - ci <= bound


class TestThresholdReport:
    def test_report_chain(self, nllr):
        rep = bounds.threshold_report(nllr, 200, 0.05, mc_reps=20_000, seed=1)
        assert rep.lb2 <= rep.lb1
        assert rep.lb1 <= rep.mc_quantile + 3 * rep.mc_stderr
        assert rep.mc_quantile <= rep.ub1 + 3 * rep.mc_stderr
        assert rep.ub1 <= rep.ub3 <= rep.ub2
        assert rep.model_spec == nllr.spec()

    def test_report_without_mc_or_lb(self):
        rep = bounds.threshold_report(models.BernoulliPM(0.2), 50, 0.1)
        assert rep.mc_quantile is None and rep.lb1 is None
        assert rep.ub1 <= rep.ub3 <= rep.ub2
