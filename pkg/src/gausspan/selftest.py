"""Closed forms against independent quadrature at randomized parameter points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gaussian_kernel as gk
from .bargmann import bargmann_gaussian_translate, bargmann_numeric
from .numerics import QuadratureSpec, integrate_real_line

SPEC = QuadratureSpec(atol=1e-300, rtol=1e-13)


@dataclass
class CheckResult:
    name: str
    points: int
    max_rel_error: float
    tol: float
    worst_params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "points": self.points,
            "max_rel_error": self.max_rel_error,
            "tol": self.tol,
            "passed": self.passed,
            "worst_params": self.worst_params,
        }


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / abs(b)


def _gram(rng: np.random.Generator, count: int):
    for _ in range(count):
        lam, mu = rng.uniform(-3, 3, 2)
        g1, g2 = gk.translate(lam), gk.translate(mu)
        closed = 2.0**-0.5 * math.exp(-math.pi * (lam - mu) ** 2 / 2.0)
        quad = integrate_real_line(lambda t: g1(t) * g2(t), g1.envelope(), SPEC)
        yield _rel(quad, closed), {"lambda": lam, "mu": mu}


def _bargmann(rng: np.random.Generator, count: int):
    for _ in range(count):
        mu = rng.uniform(-1.5, 1.5)
        z = complex(*rng.uniform(-2, 2, 2))
        g = gk.translate(mu)
        closed = complex(bargmann_gaussian_translate(mu)(z))
        quad = bargmann_numeric(g, z, 1.0, SPEC)
        yield _rel(quad, closed), {"mu": mu, "z": [z.real, z.imag]}


def _convolution(rng: np.random.Generator, count: int):
    for _ in range(count):
        w1, w2 = rng.uniform(0.5, 3, 2)
        c1, c2, t = rng.uniform(-1, 1, 3)
        g1, g2 = gk.GaussianFn(1.0, w1, c1), gk.GaussianFn(1.0, w2, c2)
        closed = gk.convolve(g1, g2)(t)
        quad = integrate_real_line(lambda s: g1(s) * g2(t - s), g1.envelope(), SPEC)
        yield _rel(quad, closed), {"widths": [w1, w2], "centers": [c1, c2], "t": t}


def _fourier(rng: np.random.Generator, count: int):
    for _ in range(count):
        w = rng.uniform(0.5, 2.0)
        xi = rng.uniform(-1.5, 1.5)
        g = gk.GaussianFn(1.0, w, 0.0)
        closed = gk.fourier_transform(g)(xi)
        # the transform of an even function is its cosine transform
        quad = integrate_real_line(lambda t: g(t) * np.cos(2 * np.pi * t * xi), g.envelope(), SPEC)
        yield _rel(quad, closed), {"width": w, "xi": xi}
    # self-duality of the unit Gaussian
    for xi in rng.uniform(-1.5, 1.5, 2):
        quad = integrate_real_line(lambda t: gk.PHI(t) * np.cos(2 * np.pi * t * xi), gk.PHI.envelope(), SPEC)
        yield _rel(quad, gk.PHI(xi)), {"width": 1.0, "xi": float(xi)}


CHECKS = {
    "gram_entries": _gram,
    "bargmann_closed_form": _bargmann,
    "convolution": _convolution,
    "fourier": _fourier,
}


def run_selftest(tol: float = 1e-10, seed: int = 0, points: int = 10) -> list[CheckResult]:
    """Run every cross-check at ``points`` randomized parameter draws."""
    results = []
    for name, gen in CHECKS.items():
        rng = np.random.default_rng([seed, len(name)])
        worst, where, n = 0.0, {}, 0
        for err, params in gen(rng, points):
            n += 1
            if err >= worst:
                worst, where = err, params
        results.append(CheckResult(name, n, worst, tol, where))
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [f"{'check':<22} {'points':>6} {'max rel err':>12} {'tol':>9}  status"]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        lines.append(f"{r.name:<22} {r.points:>6} {r.max_rel_error:>12.3e} {r.tol:>9.1e}  {status}")
    return "\n".join(lines)
