"""Shared numerical substrate.

Quadrature on the real line and over discs/annuli in the plane, a
spectral-cutoff solver for symmetric positive semidefinite systems, and
overflow-safe accumulation of log-magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfcinv

__all__ = [
    "QuadratureSpec",
    "DecayEnvelope",
    "QuadratureError",
    "SolveError",
    "SpectralSolveReport",
    "integrate_real_line",
    "integrate_interval",
    "integrate_disc",
    "log_integrate_annulus",
    "spd_truncated_solve",
    "log_product_accumulate",
]

_GL_ORDER = 20


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    ``estimate`` and ``error`` carry the best value obtained and its error
    estimate so callers can still inspect them.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class SolveError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    atol: float = 1e-12
    rtol: float = 1e-12
    max_depth: int = 40
    # initial number of panels over the truncated interval
    panels: int = 8

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if self.max_depth < 1:
            raise ValueError("subdivision limit must be >= 1")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class DecayEnvelope:
    """Bound ``|f(t)| <= scale * exp(-rate * (t - center)**2)`` for ``|t - center| >= radius``."""

    scale: float = 1.0
    rate: float = math.pi
    center: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("envelope rate must be positive")
        if self.scale < 0:
            raise ValueError("envelope scale must be nonnegative")

    def truncation_radius(self, atol: float) -> float:
        """Half-width beyond which the two tails together stay below ``atol / 10``."""
        if self.scale == 0:
            return self.radius
        # both tails: scale * sqrt(pi/rate) * erfc(sqrt(rate) * T)
        target = atol / 10.0 / (self.scale * math.sqrt(math.pi / self.rate))
        if target >= 1.0:
            return self.radius
        t = float(erfcinv(target)) / math.sqrt(self.rate)
        return max(t, self.radius)


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _as_vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def g(x: np.ndarray) -> np.ndarray:
        try:
            y = np.asarray(f(x), dtype=float)
            if y.shape == x.shape:
                return y
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(xi))) for xi in x])

    return g


def _panel_rule(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gauss-Legendre estimate on each panel [a_i, b_i], evaluated in one batch."""
    x, w = _gauss_legendre(_GL_ORDER)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return half * (vals @ w)


_ROUNDING = 64 * np.finfo(float).eps
_MAX_ACTIVE_PANELS = 1 << 16


def _adaptive(f, edges: np.ndarray, atol: float, rtol: float, max_depth: int) -> tuple[float, float]:
    """Globally adaptive composite Gauss-Legendre with batch bisection.

    Every panel is compared against the sum over its two halves; panels whose
    discrepancy exceeds their width-proportional share of the tolerance are
    bisected, all at once, until the budget is met or depth runs out.
    """
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    total_width = float(b[-1] - a[0]) if len(a) else 0.0
    if total_width == 0.0:
        return 0.0, 0.0
    whole = _panel_rule(f, a, b)

    done_value: list[float] = []
    done_error: list[float] = []
    for _ in range(max_depth):
        mid = 0.5 * (a + b)
        left = _panel_rule(f, a, mid)
        right = _panel_rule(f, mid, b)
        halves = left + right
        err = np.abs(halves - whole)

        estimate = math.fsum(done_value) + float(np.sum(halves))
        budget = max(atol, rtol * abs(estimate))
        share = budget * (b - a) / total_width
        # a discrepancy at rounding level cannot be reduced by bisection
        ok = (err <= share) | (err <= _ROUNDING * np.abs(halves))
        if np.count_nonzero(~ok) > _MAX_ACTIVE_PANELS:
            raise QuadratureError(
                "adaptive quadrature exceeded the panel budget",
                estimate,
                float(np.sum(err)),
            )
        done_value.extend(halves[ok].tolist())
        done_error.extend(err[ok].tolist())
        if ok.all():
            return math.fsum(done_value), math.fsum(done_error)
        bad = ~ok
        a, b, mid = a[bad], b[bad], mid[bad]
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        whole = np.concatenate([left[bad], right[bad]])
        order = np.argsort(a, kind="stable")
        a, b, whole = a[order], b[order], whole[order]

    estimate = math.fsum(done_value) + float(np.sum(whole))
    error = math.fsum(done_error) + float(np.sum(err[~ok]))
    if error <= max(atol, rtol * abs(estimate)):
        return estimate, error
    raise QuadratureError("adaptive quadrature did not converge", estimate, error)


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate a smooth (between breakpoints) function over a finite interval."""
    if a == b:
        return 0.0
    if a > b:
        return -integrate_interval(f, b, a, spec, breakpoints)
    inner = sorted(p for p in breakpoints if a < p < b)
    pieces = [a, *inner, b]
    edges = []
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        edges.extend(np.linspace(lo, hi, spec.panels + 1)[:-1].tolist())
    edges.append(b)
    value, _ = _adaptive(_as_vectorized(f), np.array(edges), spec.atol, spec.rtol, spec.max_depth)
    return value


def integrate_real_line(
    f: Callable,
    envelope: DecayEnvelope = DecayEnvelope(),
    spec: QuadratureSpec = DEFAULT_SPEC,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over the real line.

    ``envelope`` certifies Gaussian decay of ``|f|`` away from its center; the
    integral is truncated where the envelope puts the tails below
    ``spec.atol / 10`` and the remaining interval is integrated adaptively.
    ``f`` may be vectorized (array in, array out) or scalar.

    Raises
    ------
    QuadratureError
        If the subdivision limit is reached before the tolerance is met.
    """
    half_width = envelope.truncation_radius(spec.atol)
    lo = envelope.center - half_width
    hi = envelope.center + half_width
    return integrate_interval(f, lo, hi, spec, breakpoints)


def _theta_average(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r: np.ndarray,
    rtol: float,
    atol: float,
    m0: int = 64,
    m_max: int = 1 << 14,
    symmetry: int = 1,
) -> np.ndarray:
    """Periodic trapezoid in theta, nested doubling until every radius converges.

    Returns ``int_0^{2pi} g(r, theta) dtheta`` for each ``r``. With
    ``symmetry=k`` the integrand is assumed invariant under rotation by
    ``2pi/k`` and only one period is sampled.
    """
    period = 2.0 * np.pi / symmetry
    m = max(m0 // symmetry, 16)
    theta = period * np.arange(m) / m
    total = g(r[:, None], theta[None, :]).sum(axis=1)
    estimate = 2.0 * np.pi * total / m
    while m < m_max:
        shifted = theta + 0.5 * period / m
        total = total + g(r[:, None], shifted[None, :]).sum(axis=1)
        theta = np.sort(np.concatenate([theta, shifted]))
        m *= 2
        refined = 2.0 * np.pi * total / m
        scale = max(float(np.max(np.abs(refined))), 0.0)
        if np.all(np.abs(refined - estimate) <= np.maximum(atol, rtol * np.maximum(np.abs(refined), 1e-3 * scale))):
            return refined
        estimate = refined
    raise QuadratureError("angular trapezoid did not converge", float(np.sum(estimate)), float("nan"))


def integrate_disc(
    integrand: Callable[[np.ndarray], np.ndarray],
    radius: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    inner_radius: float = 0.0,
) -> float:
    """Area integral of a real function of ``z`` over ``inner_radius <= |z| <= radius``.

    Polar coordinates: adaptive Gauss-Legendre in ``r`` and a nested periodic
    trapezoid in ``theta``. ``integrand`` takes a complex array.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 <= inner_radius <= radius:
        raise ValueError("inner radius must lie in [0, radius]")

    def g(r, theta):
        return np.asarray(integrand(r * np.exp(1j * theta)), dtype=float)

    def radial(r):
        return r * _theta_average(g, r, spec.rtol, spec.atol / (2 * np.pi * radius))

    edges = np.linspace(inner_radius, radius, spec.panels + 1)
    value, _ = _adaptive(radial, edges, spec.atol, spec.rtol, spec.max_depth)
    return value


def log_integrate_annulus(
    log_integrand: Callable[[np.ndarray], np.ndarray],
    inner_radius: float,
    outer_radius: float,
    spec: QuadratureSpec = QuadratureSpec(atol=1e-300, rtol=1e-8),
    symmetry: int = 1,
) -> float:
    """Natural log of the area integral of ``exp(log_integrand(z))`` over an annulus.

    The exponent is shifted by its maximum on a pilot grid before
    exponentiating, so integrands like ``e^{+500}`` or ``e^{-900}`` are handled.
    ``symmetry=k`` declares invariance under rotation by ``2pi/k``.
    """
    if not 0 <= inner_radius < outer_radius:
        raise ValueError("need 0 <= inner_radius < outer_radius")
    if symmetry < 1:
        raise ValueError("symmetry must be a positive integer")
    pr = np.linspace(inner_radius, outer_radius, 65)
    pt = 2.0 * np.pi / symmetry * np.arange(256) / 256
    pilot = np.asarray(log_integrand(pr[:, None] * np.exp(1j * pt[None, :])), dtype=float)
    shift = float(np.max(pilot))
    if not np.isfinite(shift):
        if shift == -np.inf:
            return -np.inf
        raise QuadratureError("log-integrand is not finite on the pilot grid", shift, float("nan"))

    def g(r, theta):
        return np.exp(np.asarray(log_integrand(r * np.exp(1j * theta)), dtype=float) - shift)

    def radial(r):
        return r * _theta_average(g, r, spec.rtol, spec.atol, symmetry=symmetry)

    edges = np.linspace(inner_radius, outer_radius, spec.panels + 1)
    value, _ = _adaptive(radial, edges, spec.atol, spec.rtol, spec.max_depth)
    if value <= 0:
        return -np.inf
    return math.log(value) + shift


@dataclass(frozen=True)
class SpectralSolveReport:
    solution: np.ndarray
    retained: int
    smallest_retained: float
    condition: float
    degenerate: bool = False


def spd_truncated_solve(G, b, cutoff: float = 1e-12, symmetry_tol: float = 1e-13) -> SpectralSolveReport:
    """Minimum-norm solve of ``G x = b`` over the dominant eigenspace of ``G``.

    Eigen-components with eigenvalue below ``cutoff * max eigenvalue`` are
    discarded. If nothing survives, the zero vector is returned and the
    report is flagged ``degenerate``.
    """
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise SolveError("matrix must be square")
    if b.shape != (G.shape[0],):
        raise SolveError("right-hand side has the wrong shape")
    if not 0 < cutoff < 1:
        raise SolveError("cutoff must lie in (0, 1)")
    scale = float(np.max(np.abs(G))) if G.size else 0.0
    if G.size and float(np.max(np.abs(G - G.T))) > symmetry_tol * max(scale, 1.0):
        raise SolveError("matrix is not symmetric")
    n = G.shape[0]
    if n == 0:
        return SpectralSolveReport(np.zeros(0), 0, math.nan, math.nan, True)

    w, V = np.linalg.eigh(0.5 * (G + G.T))
    top = float(w[-1])
    keep = w > cutoff * top if top > 0 else np.zeros(n, dtype=bool)
    if not keep.any():
        return SpectralSolveReport(np.zeros(n), 0, math.nan, math.inf, True)
    wk = w[keep]
    Vk = V[:, keep]
    x = Vk @ ((Vk.T @ b) / wk)
    return SpectralSolveReport(
        solution=x,
        retained=int(keep.sum()),
        smallest_retained=float(wk[0]),
        condition=top / float(wk[0]),
    )


def log_product_accumulate(terms, axis: int | None = None):
    """Sum log-magnitudes of factors; a ``-inf`` term (zero factor) wins.

    A flat sequence is summed with correctly rounded ``math.fsum``. With
    ``axis`` given, arrays are reduced with numpy's pairwise summation.
    """
    if axis is None:
        values = [float(t) for t in np.ravel(np.asarray(terms, dtype=float))]
        if any(v == -math.inf for v in values):
            return -math.inf
        return math.fsum(values)
    arr = np.asarray(terms, dtype=float)
    out = np.sum(arr, axis=axis)
    zero = np.any(np.isneginf(arr), axis=axis)
    return np.where(zero, -np.inf, out)
