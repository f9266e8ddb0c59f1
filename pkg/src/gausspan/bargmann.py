"""The Bargmann transform and truncated Fock-space norms.

``Bf(z) = 2**(1/4) * int f(t) exp(2*pi*t*z - pi*t**2 - (pi/2)*z**2) dt``.

Moduli of entire functions are handled as logs throughout; with
``z = x + iy`` the kernel factors as
``exp(pi|z|^2/2) * exp(-pi(t-x)^2) * exp(i(2 pi t y - pi x y))``, so the
quadrature only ever sees the bounded part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import gaussian_kernel as gk
from .numerics import (
    DecayEnvelope,
    QuadratureSpec,
    integrate_real_line,
    log_integrate_annulus,
)

__all__ = [
    "EntireFnHandle",
    "FockNormTrend",
    "GrowthBoundReport",
    "BoundedFunction",
    "bargmann_gaussian_translate",
    "bargmann_numeric",
    "bargmann_quadrature_handle",
    "exp_quadratic",
    "constant",
    "real_line_identity_check",
    "fock_norm_trend",
    "classify_increments",
    "growth_bound_check",
    "gaussian_test_function",
    "indicator_test_function",
]

LOG_PREFACTOR = 0.25 * math.log(2.0)


@dataclass(frozen=True)
class EntireFnHandle:
    """An entire function known through evaluation and log-modulus callables."""

    func: Callable
    log_abs: Callable
    descriptor: dict = field(default_factory=dict)
    order: float | None = None
    type_: float | None = None

    def __call__(self, z):
        return self.func(z)


def bargmann_gaussian_translate(mu: float) -> EntireFnHandle:
    """Closed form ``B[phi(. - mu)](z) = 2**(-1/4) exp(-pi mu^2/2) exp(pi mu z)``."""
    log_c = -LOG_PREFACTOR - math.pi * mu * mu / 2.0

    def func(z):
        z = np.asarray(z, dtype=complex)
        return np.exp(log_c + math.pi * mu * z)

    def log_abs(z):
        z = np.asarray(z, dtype=complex)
        return log_c + math.pi * mu * z.real

    return EntireFnHandle(func, log_abs, {"kind": "closed_form", "family": "gaussian_translate", "mu": mu}, 1.0, math.pi * abs(mu))


def exp_quadratic(c: complex = math.pi / 2) -> EntireFnHandle:
    """``exp(c z^2)``; with ``c = pi/2`` this sits exactly at the Fock growth limit."""

    def func(z):
        return np.exp(c * np.asarray(z, dtype=complex) ** 2)

    def log_abs(z):
        return (c * np.asarray(z, dtype=complex) ** 2).real

    return EntireFnHandle(func, log_abs, {"kind": "closed_form", "family": "exp_quadratic", "c": c}, 2.0, abs(c))


def constant(value: float = 1.0) -> EntireFnHandle:
    def func(z):
        return np.full(np.shape(z), value, dtype=complex)

    def log_abs(z):
        return np.full(np.shape(z), math.log(abs(value)))

    return EntireFnHandle(func, log_abs, {"kind": "closed_form", "family": "constant", "value": value}, 0.0, 0.0)


def _reduced_integral(
    f: Callable,
    z: complex,
    sup_norm: float,
    spec: QuadratureSpec,
    breakpoints: Sequence[float],
) -> complex:
    """``int f(t) exp(-pi (t-x)^2) exp(i(2 pi t y - pi x y)) dt``."""
    x, y = z.real, z.imag
    env = DecayEnvelope(scale=sup_norm, rate=math.pi, center=x)
    # tolerance relative to the L1 mass of the integrand: the oscillating
    # factor can make the value itself orders of magnitude smaller
    mass = integrate_real_line(
        lambda t: np.abs(f(t)) * np.exp(-np.pi * (t - x) ** 2),
        env,
        QuadratureSpec(atol=1e-300, rtol=1e-6, max_depth=spec.max_depth),
        breakpoints,
    )
    if mass == 0.0:
        return 0j
    spec = QuadratureSpec(atol=max(spec.atol * mass, 1e-300), rtol=spec.rtol, max_depth=spec.max_depth, panels=spec.panels)
    env = DecayEnvelope(scale=sup_norm, rate=math.pi, center=x)

    def re(t):
        return f(t) * np.exp(-np.pi * (t - x) ** 2) * np.cos(2 * np.pi * t * y - np.pi * x * y)

    def im(t):
        return f(t) * np.exp(-np.pi * (t - x) ** 2) * np.sin(2 * np.pi * t * y - np.pi * x * y)

    real = integrate_real_line(re, env, spec, breakpoints)
    imag = integrate_real_line(im, env, spec, breakpoints) if y != 0 else 0.0
    return complex(real, imag)


def bargmann_numeric(
    f: Callable,
    z: complex,
    sup_norm: float = 1.0,
    spec: QuadratureSpec = QuadratureSpec(),
    breakpoints: Sequence[float] = (),
) -> complex:
    """Bargmann transform of a bounded function by quadrature.

    ``sup_norm`` bounds ``|f|``; with the Gaussian factor it certifies the
    decay used for truncation. Jumps of ``f`` should be passed as
    ``breakpoints``.
    """
    z = complex(z)
    core = _reduced_integral(f, z, sup_norm, spec, breakpoints)
    return 2.0**0.25 * math.exp(math.pi * abs(z) ** 2 / 2.0) * core


def bargmann_normalized_modulus(
    f: Callable, z: complex, sup_norm: float = 1.0, spec: QuadratureSpec = QuadratureSpec(), breakpoints=()
) -> float:
    """``|Bf(z)| * exp(-pi |z|^2 / 2)`` without forming the large factor."""
    return 2.0**0.25 * abs(_reduced_integral(f, complex(z), sup_norm, spec, breakpoints))


def bargmann_quadrature_handle(
    f: Callable, sup_norm: float = 1.0, spec: QuadratureSpec = QuadratureSpec(), breakpoints=(), name: str = "f"
) -> EntireFnHandle:
    def func(z):
        z = np.asarray(z, dtype=complex)
        flat = [bargmann_numeric(f, complex(w), sup_norm, spec, breakpoints) for w in z.ravel()]
        return np.array(flat, dtype=complex).reshape(z.shape)

    def log_abs(z):
        z = np.asarray(z, dtype=complex)
        flat = [
            LOG_PREFACTOR
            + math.pi * abs(complex(w)) ** 2 / 2.0
            + math.log(abs(_reduced_integral(f, complex(w), sup_norm, spec, breakpoints)))
            for w in z.ravel()
        ]
        return np.array(flat).reshape(z.shape)

    return EntireFnHandle(func, log_abs, {"kind": "quadrature", "integrand": name}, None, None)


def real_line_identity_check(mu: float, xs) -> float:
    """Max relative deviation between ``B[phi_mu](x)`` and ``2**(1/4) e^{pi x^2/2} <phi_mu, phi_x>``.

    Both sides are formed as logs; only their difference is exponentiated.
    """
    handle = bargmann_gaussian_translate(mu)
    target = gk.translate(mu)
    worst = 0.0
    for x in np.asarray(xs, dtype=float).ravel():
        left = float(handle.log_abs(complex(x)))
        right = LOG_PREFACTOR + math.pi * x * x / 2.0 + gk.log_inner_product(target, gk.translate(float(x)))
        # both sides are positive reals on the real line
        worst = max(worst, abs(math.expm1(left - right)))
    return worst


@dataclass(frozen=True)
class FockNormTrend:
    radii: np.ndarray
    norms: np.ndarray  # truncated ||F||^2 up to each radius
    log_increments: np.ndarray  # log of the mass in each annulus between consecutive radii
    classification: str  # "converging" | "diverging" | "inconclusive"
    growth_exponent: float  # slope of log increment against R^2

    def as_dict(self) -> dict:
        return {
            "radii": self.radii.tolist(),
            "norms": self.norms.tolist(),
            "log_increments": self.log_increments.tolist(),
            "classification": self.classification,
            "growth_exponent": self.growth_exponent,
        }


def classify_increments(log_increments: np.ndarray) -> str:
    """Converging if each annulus carries at most half the previous one's mass,
    diverging if the mass per annulus does not drop below 90% of the previous,
    inconclusive otherwise."""
    steps = np.diff(np.asarray(log_increments, dtype=float))
    if len(steps) == 0:
        return "inconclusive"
    if np.all(steps <= -math.log(2.0)):
        return "converging"
    if np.all(steps >= math.log(0.9)):
        return "diverging"
    return "inconclusive"


def fock_norm_trend(
    F,
    radii: Sequence[float],
    spec: QuadratureSpec = QuadratureSpec(atol=1e-300, rtol=1e-9),
    symmetry: int = 1,
) -> FockNormTrend:
    """Truncated Fock norms ``int_{|z|<R} |F|^2 e^{-pi|z|^2}`` along a radius schedule.

    ``F`` is anything with a ``log_abs(z)`` method. Each annulus is integrated
    in log domain, so neither overflow nor cancellation between nearby
    truncated norms can occur. ``symmetry=k`` declares ``|F(e^{2pi i/k} z)| = |F(z)|``.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 3 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radius schedule must be strictly increasing, positive, with at least 3 radii")

    def log_integrand(z):
        return 2.0 * F.log_abs(z) - np.pi * np.abs(z) ** 2

    edges = np.concatenate([[0.0], radii])
    logs = np.array([log_integrate_annulus(log_integrand, lo, hi, spec, symmetry) for lo, hi in zip(edges[:-1], edges[1:])])
    norms = np.cumsum(np.exp(logs))
    increments = logs[1:]
    mid2 = radii[1:] ** 2
    finite = np.isfinite(increments)
    if finite.sum() >= 2:
        slope = float(np.polyfit(mid2[finite], increments[finite], 1)[0])
    else:
        slope = math.nan
    return FockNormTrend(radii, norms, increments, classify_increments(increments), slope)


@dataclass(frozen=True)
class BoundedFunction:
    """A bounded test function with its ``L^p`` norm for a chosen exponent."""

    name: str
    func: Callable
    p: float
    norm_p: float
    sup_norm: float
    breakpoints: tuple = ()
    closed_form: EntireFnHandle | None = None


def gaussian_norm_q(q: float) -> float:
    """``||phi||_q`` for ``phi = exp(-pi t^2)``."""
    if math.isinf(q):
        return 1.0
    return q ** (-1.0 / (2.0 * q))


def gaussian_test_function(mu: float, p: float) -> BoundedFunction:
    g = gk.translate(mu)
    return BoundedFunction(
        name=f"phi(.-{mu:g}) p={p:g}",
        func=lambda t: gk.evaluate(g, t),
        p=p,
        norm_p=gaussian_norm_q(p),
        sup_norm=1.0,
        closed_form=bargmann_gaussian_translate(mu),
    )


def indicator_test_function(a: float, b: float, p: float) -> BoundedFunction:
    if not a < b:
        raise ValueError("need a < b")
    width = b - a
    norm = 1.0 if math.isinf(p) else width ** (1.0 / p)

    def func(t):
        t = np.asarray(t, dtype=float)
        return ((t >= a) & (t <= b)).astype(float)

    return BoundedFunction(f"1[{a:g},{b:g}] p={p:g}", func, p, norm, 1.0, (a, b))


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class GrowthBoundReport:
    name: str
    p: float
    bound: float  # 2^(1/4) ||f||_p ||phi||_q
    printed_bound: float  # ||f||_p ||phi||_q
    max_normalized: float  # max |Bf(z)| e^{-pi|z|^2/2}
    max_ratio: float
    max_ratio_printed: float
    argmax: complex
    holds: bool


def growth_bound_check(fn: BoundedFunction, grid, spec: QuadratureSpec = QuadratureSpec()) -> GrowthBoundReport:
    """Compare ``|Bf(z)| e^{-pi|z|^2/2}`` with ``2^(1/4) ||f||_p ||phi||_q`` on a grid."""
    grid = np.asarray(grid, dtype=complex).ravel()
    q = conjugate_exponent(fn.p)
    printed = fn.norm_p * gaussian_norm_q(q)
    bound = 2.0**0.25 * printed
    if fn.closed_form is not None:
        values = np.exp(fn.closed_form.log_abs(grid) - np.pi * np.abs(grid) ** 2 / 2.0)
    else:
        values = np.array(
            [bargmann_normalized_modulus(fn.func, z, fn.sup_norm, spec, fn.breakpoints) for z in grid]
        )
    k = int(np.argmax(values))
    top = float(values[k])
    ratio = top / bound
    return GrowthBoundReport(
        name=fn.name,
        p=fn.p,
        bound=bound,
        printed_bound=printed,
        max_normalized=top,
        max_ratio=ratio,
        max_ratio_printed=top / printed,
        argmax=complex(grid[k]),
        holds=ratio <= 1.0 + 1e-12,
    )
