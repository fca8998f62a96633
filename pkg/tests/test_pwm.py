import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevtree import gev, pwm
from gevtree.errors import DegenerateSample, PwmError, ShapeOutOfRange, TooFewSamples
from gevtree.gev import GevParams


class TestMoments:
    def test_three_point_sample(self):
        m = pwm.compute_moments([2.0, 0.0, 1.0])
        assert m.b0 == pytest.approx(1.0, rel=1e-15)
        assert m.b1 == pytest.approx(5 / 6, rel=1e-15)
        assert m.b2 == pytest.approx(2 / 3, rel=1e-15)
        # 2/3 - log 2 / log 3, evaluated with mpmath
        assert m.c == pytest.approx(0.0357369130952092, rel=1e-12)

    def test_order_does_not_matter(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=50)
        a = pwm.compute_moments(y)
        b = pwm.compute_moments(rng.permutation(y))
        assert (a.b0, a.b1, a.b2) == pytest.approx((b.b0, b.b1, b.b2), rel=1e-14)

    def test_brute_force_definition(self):
        y = np.sort(np.random.default_rng(1).gamma(2.0, size=17))
        n = y.size
        b1 = sum(j / (n - 1) * y[j] for j in range(n)) / n
        b2 = sum(j * (j - 1) / ((n - 1) * (n - 2)) * y[j] for j in range(n)) / n
        m = pwm.compute_moments(y)
        assert m.b1 == pytest.approx(b1, rel=1e-13)
        assert m.b2 == pytest.approx(b2, rel=1e-13)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            pwm.compute_moments([1.0, 2.0])

    def test_constant_sample(self):
        with pytest.raises(DegenerateSample):
            pwm.compute_moments([5.0, 5.0, 5.0, 5.0])

    def test_errors_share_a_base(self):
        assert issubclass(TooFewSamples, PwmError)
        assert issubclass(DegenerateSample, PwmError)


class TestEstimate:
    def test_three_point_shape(self):
        est = pwm.estimate([0.0, 1.0, 2.0])
        c = 2 / 3 - math.log(2) / math.log(3)
        assert est.xi == pytest.approx(-7.8590 * c - 2.9554 * c * c, rel=1e-14)
        assert est.xi == pytest.approx(-0.2846308210256651, rel=1e-12)

    def test_recovers_large_sample(self):
        y = gev.sample(GevParams(0.0, 1.0, 0.2), 100_000, rng=2024)
        est = pwm.estimate(y)
        assert abs(est.mu) < 0.02
        assert abs(est.sigma - 1.0) < 0.02
        assert abs(est.xi - 0.2) < 0.02

    def test_gumbel_sample_gives_small_shape(self):
        y = gev.sample(GevParams(3.0, 2.0, 0.0), 10_000, rng=5)
        est = pwm.estimate(y)
        assert abs(est.xi) < 0.05
        assert est.mu == pytest.approx(3.0, abs=0.1)
        assert est.sigma == pytest.approx(2.0, abs=0.1)

    def test_gumbel_limit_is_continuous(self):
        # Moments of an exact Gumbel(0, 1): b0 = gamma, 2 b1 - b0 = log 2, 3 b2 - b0 = log 3
        g = np.euler_gamma
        b0, b1, b2 = g, (g + math.log(2)) / 2, (g + math.log(3)) / 3
        mu, sigma, xi, ok = pwm.params_from_moments(b0, b1, b2)
        assert ok
        assert abs(xi) <= gev.EPS_XI
        assert sigma == pytest.approx(1.0, rel=1e-14)
        assert mu == pytest.approx(0.0, abs=1e-14)
        # nudging c off zero lands on the general branch with nearly the same values
        mu2, sigma2, xi2, _ = pwm.params_from_moments(b0, b1, b2 + 1e-7)
        assert abs(xi2) > gev.EPS_XI
        assert sigma2 == pytest.approx(1.0, abs=1e-5)
        assert mu2 == pytest.approx(0.0, abs=1e-5)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-100, 100), st.integers(0, 2**31 - 1))
    def test_translation_equivariance(self, shift, seed):
        y = gev.sample(GevParams(0.0, 1.0, 0.1), 200, rng=seed)
        base = pwm.estimate(y)
        moved = pwm.estimate(y + shift)
        assert moved.mu - base.mu == pytest.approx(shift, abs=1e-12 * (1 + abs(shift)) * 100)
        assert moved.sigma == pytest.approx(base.sigma, rel=1e-10)
        assert moved.xi == pytest.approx(base.xi, rel=1e-10, abs=1e-12)

    def test_exact_equivariance_on_dyadic_values(self):
        # values, shift and scale representable exactly so arithmetic is exact up to rounding
        y = np.array([0.0, 0.25, 0.5, 1.5, 2.0, 4.0, 7.5, 8.0])
        base = pwm.estimate(y)
        moved = pwm.estimate(y + 10.0)
        assert moved.mu - base.mu == pytest.approx(10.0, abs=1e-12)
        assert moved.sigma == pytest.approx(base.sigma, abs=1e-12)
        assert moved.xi == pytest.approx(base.xi, abs=1e-12)
        scaled = pwm.estimate(4.0 * y)
        assert scaled.mu == pytest.approx(4.0 * base.mu, abs=1e-12)
        assert scaled.sigma == pytest.approx(4.0 * base.sigma, abs=1e-12)
        assert scaled.xi == pytest.approx(base.xi, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 100), st.integers(0, 2**31 - 1))
    def test_scale_equivariance(self, scale, seed):
        y = gev.sample(GevParams(1.0, 2.0, -0.1), 200, rng=seed)
        base = pwm.estimate(y)
        scaled = pwm.estimate(scale * y)
        assert scaled.mu == pytest.approx(scale * base.mu, rel=1e-10)
        assert scaled.sigma == pytest.approx(scale * base.sigma, rel=1e-10)
        assert scaled.xi == pytest.approx(base.xi, rel=1e-10, abs=1e-13)

    def test_shape_out_of_range(self):
        # one low outlier below a flat top: c = 1 - log 2 / log 3, shape about -3.3
        with pytest.raises(ShapeOutOfRange):
            pwm.estimate([0.0] + [1.0] * 9)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(9)
        samples = [gev.sample(GevParams(0, 1, 0.1), 40, rng=rng) for _ in range(5)]
        moments = [pwm.compute_moments(s) for s in samples]
        b = np.array([[m.b0, m.b1, m.b2] for m in moments]).T
        mu, sigma, xi, ok = pwm.params_from_moments(*b)
        assert ok.all()
        for i, s in enumerate(samples):
            est = pwm.estimate(s)
            assert (mu[i], sigma[i], xi[i]) == pytest.approx(est.astuple(), rel=1e-14)
