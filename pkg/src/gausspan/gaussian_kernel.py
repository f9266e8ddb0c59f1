"""Closed-form algebra of Gaussians ``A * exp(-a*pi*(t - mu)**2)``.

Fourier convention: ``g_hat(xi) = int g(t) exp(-2*pi*i*t*xi) dt``, under which
the unit Gaussian ``exp(-pi*t**2)`` is its own transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DecayEnvelope, QuadratureSpec, integrate_real_line

__all__ = [
    "GaussianFn",
    "PHI",
    "phi_a",
    "translate",
    "evaluate",
    "inner_product",
    "log_inner_product",
    "norm_squared",
    "convolve",
    "fourier_transform",
    "ConvolutionIdentityReport",
    "convolution_identity_check",
    "EnvelopeFit",
    "envelope_fit",
]

QUARTER_ROOT_2 = 2.0**0.25


@dataclass(frozen=True)
class GaussianFn:
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not self.width > 0:
            raise ValueError("width must be positive")

    def __call__(self, t):
        return evaluate(self, t)

    def envelope(self) -> DecayEnvelope:
        return DecayEnvelope(scale=self.amplitude, rate=self.width * math.pi, center=self.center)


PHI = GaussianFn()


def phi_a(a: float) -> GaussianFn:
    """``2**(1/4) * exp(-a*pi*t**2)``."""
    return GaussianFn(QUARTER_ROOT_2, a, 0.0)


def translate(shift: float) -> GaussianFn:
    """Unit Gaussian centered at ``shift``."""
    return GaussianFn(1.0, 1.0, shift)


def evaluate(g: GaussianFn, t):
    t = np.asarray(t, dtype=float)
    out = g.amplitude * np.exp(-g.width * np.pi * (t - g.center) ** 2)
    return float(out) if out.ndim == 0 else out


def log_inner_product(g1: GaussianFn, g2: GaussianFn) -> float:
    s = g1.width + g2.width
    reduced = g1.width * g2.width / s
    return (
        math.log(g1.amplitude)
        + math.log(g2.amplitude)
        - 0.5 * math.log(s)
        - math.pi * reduced * (g1.center - g2.center) ** 2
    )


def inner_product(g1: GaussianFn, g2: GaussianFn) -> float:
    """``int g1(t) g2(t) dt`` in closed form."""
    return math.exp(log_inner_product(g1, g2))


def norm_squared(g: GaussianFn) -> float:
    return inner_product(g, g)


def convolve(g1: GaussianFn, g2: GaussianFn) -> GaussianFn:
    s = g1.width + g2.width
    return GaussianFn(
        g1.amplitude * g2.amplitude / math.sqrt(s),
        g1.width * g2.width / s,
        g1.center + g2.center,
    )


def fourier_transform(g: GaussianFn) -> GaussianFn:
    """Transform of a centered Gaussian; only centered inputs are accepted."""
    if g.center != 0:
        raise ValueError("fourier_transform needs a centered Gaussian (only |g_hat| is used downstream)")
    return GaussianFn(g.amplitude / math.sqrt(g.width), 1.0 / g.width, 0.0)


def _convolution_by_quadrature(g1: GaussianFn, g2: GaussianFn, t: float, spec: QuadratureSpec) -> float:
    def integrand(s):
        return evaluate(g1, s) * evaluate(g2, t - s)

    return integrate_real_line(integrand, g1.envelope(), spec)


@dataclass(frozen=True)
class ConvolutionIdentityReport:
    a: float
    b: float
    printed_constant: float
    closed_form_constant: float
    oracle_constant: float
    relative_deviation: float  # oracle vs printed constant
    shape_deviation: float  # max relative spread of (phi_a * phi_b)(t) / phi(t)
    shape_ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def convolution_identity_check(
    a: float,
    grid=(-1.0, -0.5, 0.0, 0.25, 0.5, 1.0),
    spec: QuadratureSpec = QuadratureSpec(atol=1e-15, rtol=1e-14),
    shape_tol: float = 1e-10,
) -> ConvolutionIdentityReport:
    """Check that ``phi_a * phi_b`` is a multiple of ``phi`` when ``1/a + 1/b = 1``.

    The multiple is measured by quadrature and compared with the printed
    constant ``sqrt(a - 1) / a``.
    """
    if not a > 1:
        raise ValueError("need a > 1")
    b = a / (a - 1.0)
    fa, fb = phi_a(a), phi_a(b)
    closed = convolve(fa, fb)
    quad_vals = np.array([_convolution_by_quadrature(fa, fb, float(t), spec) for t in grid])
    closed_vals = np.asarray(evaluate(closed, np.asarray(grid)))
    ref = np.asarray(evaluate(PHI, np.asarray(grid)))
    ratios = np.concatenate([quad_vals / ref, closed_vals / ref])
    oracle = float(quad_vals[list(grid).index(0.0)]) if 0.0 in grid else float(np.mean(quad_vals / ref))
    spread = float(np.max(np.abs(ratios / oracle - 1.0)))
    printed = math.sqrt(a - 1.0) / a
    return ConvolutionIdentityReport(
        a=a,
        b=b,
        printed_constant=printed,
        closed_form_constant=closed.amplitude,
        oracle_constant=oracle,
        relative_deviation=(oracle - printed) / printed,
        shape_deviation=spread,
        shape_ok=spread <= shape_tol and abs(closed.width - 1.0) <= 1e-12,
    )


@dataclass(frozen=True)
class EnvelopeFit:
    lower_amplitude: float
    lower_rate: float
    lower_power: int
    upper_amplitude: float
    upper_rate: float
    upper_power: int
    lower_slack: float
    upper_slack: float
    threshold_lower: float  # a/2: both sides below it -> no spanning
    threshold_upper: float  # b/2: one side above it -> spanning

    def lower(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.lower_amplitude / (1.0 + xi ** (2 * self.lower_power)) * np.exp(-self.lower_rate * np.pi * xi**2)

    def upper(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.upper_amplitude * (1.0 + xi ** (2 * self.upper_power)) * np.exp(-self.upper_rate * np.pi * xi**2)


def envelope_fit(xi, modulus, n: int, m: int, tail_fraction: float = 0.2) -> EnvelopeFit:
    """Fit two-sided Gaussian envelopes with polynomial corrections to ``|g_hat|``.

    The exponential rate is the regression slope of ``-log|g_hat|`` on
    ``pi*xi**2`` over the last ``tail_fraction`` of the grid; the amplitudes
    are then the tightest constants that make each bound hold at every sample.
    """
    xi = np.asarray(xi, dtype=float)
    mod = np.asarray(modulus, dtype=float)
    if xi.shape != mod.shape or xi.ndim != 1:
        raise ValueError("xi and modulus must be 1-D arrays of equal length")
    if n < 0 or m < 0:
        raise ValueError("polynomial powers must be nonnegative")
    if np.any(mod <= 0) or not np.all(np.isfinite(mod)):
        raise ValueError("modulus samples must be strictly positive: a zero of the transform admits no lower envelope")
    if xi.min() > 0 or xi.max() < 3:
        raise ValueError("sample grid must cover [0, xi_max] with xi_max >= 3")

    order = np.argsort(xi)
    xi, mod = xi[order], mod[order]
    count = max(3, int(math.ceil(tail_fraction * len(xi))))
    x = np.pi * xi[-count:] ** 2
    y = -np.log(mod[-count:])
    rate = float(np.polyfit(x, y, 1)[0])
    if not rate > 0:
        raise ValueError("samples do not decay like a Gaussian")

    log_mod = np.log(mod)
    # A <= |g_hat| (1 + xi^2n) e^{a pi xi^2}
    lower_log = log_mod + np.log1p(xi ** (2 * n)) + rate * np.pi * xi**2
    # B >= |g_hat| e^{b pi xi^2} / (1 + xi^2m)
    upper_log = log_mod - np.log1p(xi ** (2 * m)) + rate * np.pi * xi**2
    # one-ulp-scale margin so the bounds survive re-evaluation rounding
    a_const = float(np.exp(lower_log.min())) * (1.0 - 1e-12)
    b_const = float(np.exp(upper_log.max())) * (1.0 + 1e-12)
    fit = EnvelopeFit(
        lower_amplitude=a_const,
        lower_rate=rate,
        lower_power=n,
        upper_amplitude=b_const,
        upper_rate=rate,
        upper_power=m,
        lower_slack=float(np.max(1.0 - np.exp(lower_log.min() - lower_log))),
        upper_slack=float(np.max(1.0 - np.exp(upper_log - upper_log.max()))),
        threshold_lower=rate / 2.0,
        threshold_upper=rate / 2.0,
    )
    return fit
