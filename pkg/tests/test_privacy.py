import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privpack import (
    NoiseStream,
    PrivacySpec,
    audit_laplace,
    composition_epsilon,
    adaptive_sum_concentration,
    truncation_overflow_concentration,
    laplace_draw,
    per_step_epsilon_dmw,
    sigma_domw,
)


class TestSpec:
    def test_valid(self):
        spec = PrivacySpec(0.5, 1e-6)
        assert spec.beta == 0.05

    @pytest.mark.parametrize("eps,delta,beta", [(0.0, 0.1, 0.05), (1.0, 1.0, 0.05), (1.0, 0.1, 0.0)])
    def test_invalid(self, eps, delta, beta):
        with pytest.raises(ValueError):
            PrivacySpec(eps, delta, beta)


class TestPerStepEpsilon:
    def test_hand_value(self):
        # ln(2/delta) = 1 at delta = 2/e, so eps' = 1/sqrt(8*2*1) = 1/4
        spec = PrivacySpec(1.0, 2.0 / math.e)
        assert per_step_epsilon_dmw(spec, T=2, m=1) == pytest.approx(0.25, rel=1e-12)

    def test_formula_evaluation(self):
        spec = PrivacySpec(0.5, 1e-6)
        expected = 0.5 / math.sqrt(8 * 625 * 4 * math.log(2e6))
        assert per_step_epsilon_dmw(spec, T=625, m=4) == pytest.approx(expected, rel=1e-12)

    def test_delta_zero_rejected(self):
        with pytest.raises(ValueError, match="delta > 0"):
            per_step_epsilon_dmw(PrivacySpec(1.0, 0.0), T=10, m=1)


class TestSigma:
    def test_pure_mode(self):
        assert sigma_domw(PrivacySpec(0.5, 0.0), m=4) == pytest.approx(8.0)

    def test_approx_mode(self):
        # ln(1/delta) = 1 at delta = 1/e: sqrt(8*2*1)/1 = 4
        assert sigma_domw(PrivacySpec(1.0, 1.0 / math.e), m=2) == pytest.approx(4.0, rel=1e-12)

    @given(st.floats(0.01, 100.0), st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_decreasing_in_epsilon(self, eps, bump):
        lo = sigma_domw(PrivacySpec(eps + bump, 0.0), m=3)
        hi = sigma_domw(PrivacySpec(eps, 0.0), m=3)
        assert lo <= hi


class TestComposition:
    def test_single_step(self):
        eps = 0.7
        expected = eps * math.sqrt(2.0) + eps * (math.e**eps - 1.0)
        assert composition_epsilon(eps, 1, 1.0 / math.e) == pytest.approx(expected, rel=1e-9)

    def test_vanishes_with_step(self):
        assert composition_epsilon(1e-12, 50, 1e-5) < 1e-9

    def test_two_evaluations_agree(self):
        eps, T, dp = 0.1, 100, 1e-5
        expanded = eps * math.sqrt(2 * T * math.log(1 / dp)) + T * eps * math.expm1(eps)
        factored = eps * (math.sqrt(2 * T * math.log(1 / dp)) + T * math.expm1(eps))
        assert composition_epsilon(eps, T, dp) == pytest.approx(expanded, rel=1e-12)
        assert expanded == pytest.approx(factored, rel=1e-12)


class TestNoiseStream:
    def test_scale_zero_is_exactly_zero(self):
        stream = NoiseStream(0.0, seed=1)
        assert laplace_draw(stream) == 0.0
        assert np.all(stream.draws(100) == 0.0)

    def test_deterministic_across_streams(self):
        a = NoiseStream(2.0, seed=42).draws(1000)
        b = NoiseStream(2.0, seed=42).draws(1000)
        assert np.array_equal(a, b)
        c = NoiseStream(2.0, seed=43).draws(1000)
        assert not np.array_equal(a, c)

    def test_draw_counter(self):
        stream = NoiseStream(1.0, seed=5)
        stream.draw()
        stream.draws((10, 3))
        assert stream.draws_emitted == 31

    def test_moments_and_tails(self):
        x = NoiseStream(1.0, seed=7).draws(10**6)
        assert abs(float(x.mean())) < 0.01
        assert 1.95 < float(x.var()) < 2.05
        for t in (1, 2, 3):
            freq = float(np.mean(np.abs(x) >= t))
            p = math.exp(-t)
            sd = math.sqrt(p * (1 - p) / x.size)
            assert abs(freq - p) <= 3 * sd

    def test_median_symmetry(self):
        x = NoiseStream(1.0, seed=8).draws(10**6)
        assert abs(float(np.median(x))) <= 0.005

    def test_scale_validation(self):
        with pytest.raises(ValueError):
            NoiseStream(-1.0, seed=0)


class TestAudit:
    def test_unit_epsilon_estimate(self):
        res = audit_laplace(1.0, 10**5, seed=3)
        assert res.epsilon_hat <= 1.1
        assert not res.non_private

    def test_zero_noise_flagged_non_private(self):
        res = audit_laplace(math.inf, 10**4, seed=3)
        assert math.isinf(res.epsilon_hat) and res.non_private

    def test_identical_inputs_near_zero(self):
        res = audit_laplace(1.0, 10**5, seed=3, inputs=(0.25, 0.25))
        assert res.epsilon_hat <= 0.05


class TestConcentration:
    def test_adaptive_sum_zero_noise(self):
        res = adaptive_sum_concentration(4.0, 1.0, 50, 3, 0.05, 200, seed=1, noise_scale=0.0)
        assert res.violation_rate == 0.0

    def test_adaptive_sum_rate_within_beta(self):
        res = adaptive_sum_concentration(4.0, 1.0, 200, 4, 0.05, 500, seed=2)
        assert res.violation_rate <= 0.05

    def test_adaptive_sum_doubled_threshold(self):
        res = adaptive_sum_concentration(4.0, 1.0, 200, 4, 0.05, 500, seed=2, threshold_factor=2.0)
        assert res.violation_rate == 0.0

    def test_overflow_rate_within_beta(self):
        res = truncation_overflow_concentration(4.0, 1.0, 200, 4, 0.05, 500, seed=4)
        assert res.violation_rate <= 0.05

    def test_overflow_zero_noise(self):
        res = truncation_overflow_concentration(4.0, 1.0, 50, 3, 0.05, 200, seed=5, noise_scale=0.0)
        assert res.violation_rate == 0.0
