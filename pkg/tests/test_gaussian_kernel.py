import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gausspan import gaussian_kernel as gk
from gausspan.numerics import DecayEnvelope, QuadratureSpec, integrate_real_line

SPEC = QuadratureSpec(atol=1e-15, rtol=1e-14)
pos = st.floats(0.5, 3.0)
centers = st.floats(-2.0, 2.0)


def quad_inner(g1, g2):
    env = DecayEnvelope(scale=g1.amplitude * g2.amplitude, rate=min(g1.width, g2.width) * math.pi / 2, center=0.0,
                        radius=2 * (abs(g1.center) + abs(g2.center)) + 1)
    return integrate_real_line(lambda t: g1(t) * g2(t), env, SPEC)


def quad_conv(g1, g2, t):
    return integrate_real_line(lambda s: g1(s) * g2(t - s), g1.envelope(), SPEC)


class TestEvaluate:
    def test_values(self):
        assert gk.PHI(0.0) == 1.0
        assert gk.PHI(1.0) == pytest.approx(0.0432139, abs=1e-7)
        assert gk.phi_a(2)(0.0) == pytest.approx(1.189207, abs=1e-6)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gk.GaussianFn(0.0, 1.0)
        with pytest.raises(ValueError):
            gk.GaussianFn(1.0, -1.0)


class TestInnerProduct:
    def test_norm(self):
        assert gk.inner_product(gk.PHI, gk.PHI) == pytest.approx(quad_inner(gk.PHI, gk.PHI), abs=1e-12)
        assert gk.inner_product(gk.PHI, gk.PHI) == pytest.approx(0.7071068, abs=1e-7)

    def test_unit_shift(self):
        val = gk.inner_product(gk.PHI, gk.translate(1.0))
        assert val == pytest.approx(quad_inner(gk.PHI, gk.translate(1.0)), rel=1e-12)
        assert val == pytest.approx(2**-0.5 * math.exp(-math.pi / 2), rel=1e-15)

    @given(pos, pos, centers, centers, st.floats(0.2, 3), st.floats(0.2, 3))
    def test_symmetric_and_cauchy_schwarz(self, a, b, c1, c2, A, B):
        g1, g2 = gk.GaussianFn(A, a, c1), gk.GaussianFn(B, b, c2)
        assert gk.inner_product(g1, g2) == gk.inner_product(g2, g1)
        assert gk.inner_product(g1, g2) > 0
        assert gk.inner_product(g1, g2) ** 2 <= gk.norm_squared(g1) * gk.norm_squared(g2) * (1 + 1e-14)

    @given(centers, centers, st.floats(-5, 5))
    def test_translation_invariance(self, lam, mu, tau):
        a = gk.inner_product(gk.translate(lam), gk.translate(mu))
        b = gk.inner_product(gk.translate(lam + tau), gk.translate(mu + tau))
        assert a == pytest.approx(b, rel=1e-12)

    def test_against_quadrature_random(self, rng):
        for _ in range(5):
            a, b = rng.uniform(0.5, 3, 2)
            c1, c2 = rng.uniform(-1, 1, 2)
            g1, g2 = gk.GaussianFn(1.0, a, c1), gk.GaussianFn(1.3, b, c2)
            assert gk.inner_product(g1, g2) == pytest.approx(quad_inner(g1, g2), rel=1e-11)


class TestConvolution:
    def test_phi_with_itself(self):
        c = gk.convolve(gk.PHI, gk.PHI)
        assert (c.amplitude, c.width, c.center) == pytest.approx((2**-0.5, 0.5, 0.0))
        for t in (0.0, 0.5, 1.0):
            assert c(t) == pytest.approx(quad_conv(gk.PHI, gk.PHI, t), rel=1e-12)

    def test_centers_add(self):
        assert gk.convolve(gk.translate(1.0), gk.translate(2.0)).center == 3.0

    def test_random_against_quadrature(self, rng):
        for _ in range(5):
            a, b, t = rng.uniform(0.5, 3, 3)
            g1, g2 = gk.GaussianFn(1.0, a, 0.3), gk.GaussianFn(2.0, b, -0.4)
            assert gk.convolve(g1, g2)(t) == pytest.approx(quad_conv(g1, g2, t), rel=1e-10)

    def test_phi2_constant(self):
        c = gk.convolve(gk.phi_a(2), gk.phi_a(2))
        oracle = quad_conv(gk.phi_a(2), gk.phi_a(2), 0.0)
        assert c(0.0) == pytest.approx(oracle, rel=1e-12)
        assert oracle == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
        assert abs(oracle - 0.5) > 0.2  # the printed constant 1/2 is off by sqrt(2)


class TestConvolutionIdentity:
    @pytest.mark.parametrize("a", [1.5, 2.0, 3.0])
    def test_shape_and_constant(self, a):
        rep = gk.convolution_identity_check(a)
        assert rep.shape_ok and rep.shape_deviation <= 1e-10
        assert rep.b == pytest.approx(a / (a - 1))
        assert rep.oracle_constant == pytest.approx(rep.closed_form_constant, rel=1e-8)
        assert rep.oracle_constant == pytest.approx(math.sqrt(2) * math.sqrt(a - 1) / a, rel=1e-8)
        assert rep.printed_constant == pytest.approx(math.sqrt(a - 1) / a)
        assert rep.relative_deviation == pytest.approx(math.sqrt(2) - 1, rel=1e-8)

    def test_rejects_small_a(self):
        with pytest.raises(ValueError):
            gk.convolution_identity_check(1.0)


class TestFourier:
    def fourier_quad(self, g, xi):
        return integrate_real_line(lambda t: g(t) * np.cos(2 * np.pi * t * xi), g.envelope(), SPEC)

    def test_self_dual(self):
        f = gk.fourier_transform(gk.PHI)
        assert (f.amplitude, f.width) == (1.0, 1.0)
        for xi in (0.0, 0.5, 1.0):
            assert self.fourier_quad(gk.PHI, xi) == pytest.approx(gk.PHI(xi), rel=1e-12)

    def test_phi2(self):
        f = gk.fourier_transform(gk.phi_a(2))
        assert f.amplitude == pytest.approx(2**0.25 / math.sqrt(2))
        assert f.width == 0.5
        for xi in (0.0, 0.7, 1.3):
            assert self.fourier_quad(gk.phi_a(2), xi) == pytest.approx(f(xi), rel=1e-11)

    @given(st.floats(0.1, 10), st.floats(0.1, 10))
    def test_involution(self, A, a):
        g = gk.GaussianFn(A, a, 0.0)
        back = gk.fourier_transform(gk.fourier_transform(g))
        assert back.width == pytest.approx(a, rel=1e-12)
        assert back.amplitude == pytest.approx(A, rel=1e-12)

    def test_rejects_uncentered(self):
        with pytest.raises(ValueError):
            gk.fourier_transform(gk.translate(1.0))


class TestEnvelope:
    xi = np.linspace(0, 4, 401)

    def check_bounds(self, fit, xi, mod):
        assert np.all(fit.lower(xi) <= mod)
        assert np.all(mod <= fit.upper(xi))
        assert 0 < fit.lower_rate <= fit.upper_rate

    def test_phi(self):
        mod = gk.PHI(self.xi)
        fit = gk.envelope_fit(self.xi, mod, 0, 0)
        assert fit.lower_rate == pytest.approx(1.0, rel=0.01)
        assert fit.threshold_lower == pytest.approx(0.5, rel=0.01)
        assert fit.threshold_upper == pytest.approx(0.5, rel=0.01)
        self.check_bounds(fit, self.xi, mod)

    def test_phi2_transform(self):
        mod = gk.fourier_transform(gk.phi_a(2))(self.xi)
        fit = gk.envelope_fit(self.xi, mod, 0, 0)
        assert fit.lower_rate == pytest.approx(0.5, rel=0.01)
        assert fit.threshold_lower == pytest.approx(0.25, rel=0.01)
        self.check_bounds(fit, self.xi, mod)

    def test_hermite_type(self):
        # (1 + 1/(2 pi) - t^2) e^{-pi t^2} has transform (1 + xi^2) e^{-pi xi^2}
        f = lambda t: (1 + 1 / (2 * np.pi) - t**2) * np.exp(-np.pi * t**2)
        sampled = np.array([
            integrate_real_line(lambda t: f(t) * np.cos(2 * np.pi * t * x), DecayEnvelope(scale=3.0, rate=np.pi / 2), SPEC)
            for x in self.xi
        ])
        closed = (1 + self.xi**2) * np.exp(-np.pi * self.xi**2)
        # cancellation limits the oscillatory quadrature to absolute accuracy
        np.testing.assert_allclose(sampled, closed, rtol=0, atol=1e-14)
        fit = gk.envelope_fit(self.xi, closed, 1, 1)
        self.check_bounds(fit, self.xi, closed)
        # polynomial factor biases the finite-grid rate slightly below 1
        assert fit.lower_rate == pytest.approx(1.0, rel=0.05)

    def test_rejects_zero_of_transform(self):
        # t^2 e^{-pi t^2} transforms to (1/(2 pi) - xi^2) e^{-pi xi^2}, which vanishes
        mod = np.abs((1 / (2 * np.pi) - self.xi**2) * np.exp(-np.pi * self.xi**2))
        mod[np.argmin(mod)] = 0.0
        with pytest.raises(ValueError, match="zero"):
            gk.envelope_fit(self.xi, mod, 1, 1)

    def test_rejects_short_grid(self):
        xi = np.linspace(0, 2, 50)
        with pytest.raises(ValueError):
            gk.envelope_fit(xi, gk.PHI(xi), 0, 0)

    @given(st.floats(0.3, 3.0), st.floats(0.5, 2.0), st.integers(0, 2), st.integers(0, 2))
    def test_bounds_always_hold(self, width, amp, n, m):
        g = gk.fourier_transform(gk.GaussianFn(amp, width, 0.0))
        mod = g(self.xi) * (1 + 0.3 * self.xi**2)
        fit = gk.envelope_fit(self.xi, mod, n, m)
        self.check_bounds(fit, self.xi, mod)
