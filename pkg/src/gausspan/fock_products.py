"""Weierstrass canonical products over real and rotated zero sets.

Two constructions are supported:

* ``quartic``: ``prod (1 - z^4/lambda^4)`` over a real set;
* ``genus2``: ``prod E2(z/gamma)`` over a complex set, with
  ``E2(w) = (1 - w) exp(w + w^2/2)``.

Only log-moduli are ever computed. For a zero set that is a union of full
rotation orbits ``{g, ig, -g, -ig}`` the genus-2 factors of one orbit
multiply to ``1 - z^4/g^4``; the ``orbit`` strategy uses that identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bargmann import FockNormTrend, fock_norm_trend
from .lambda_sets import ComplexZeroSet, DiscreteSet, generate_sqrt_set, union_with_rotation
from .numerics import QuadratureSpec, log_product_accumulate

__all__ = [
    "TruncationError",
    "CanonicalProduct",
    "ProductEval",
    "IndicatorEstimate",
    "ConvexityReport",
    "FockProbeResult",
    "AnnihilationReport",
    "quartic_product",
    "genus2_product",
    "quartic_product_eval",
    "genus2_product_eval",
    "indicator_estimate",
    "indicator_target",
    "trig_convexity_check",
    "fock_membership_probe",
    "probe_product",
    "annihilation_check",
]

# bound on (evaluation points x factors) held in memory at once
_CHUNK = 1 << 21


class TruncationError(ValueError):
    """Evaluation radius too large for the truncated zero set."""

    def __init__(self, message: str, required_n: int | None = None):
        super().__init__(message if required_n is None else f"{message}; need per-side truncation N >= {required_n}")
        self.required_n = required_n


class _RayIndex:
    """Zeros grouped by argument, for fast nearest-zero distances."""

    def __init__(self, zeros: np.ndarray):
        zeros = np.asarray(zeros, dtype=complex)
        self.zeros = zeros
        args = np.round(np.mod(np.angle(zeros), 2 * np.pi), 12)
        self.rays = {}
        for a in np.unique(args):
            self.rays[float(a)] = np.sort(np.abs(zeros[args == a]))
        self.moduli = np.unique(np.abs(zeros))

    def distance(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if len(self.zeros) == 0:
            return np.full(z.shape, np.inf)
        if len(self.rays) > 64:
            return np.min(np.abs(z.ravel()[:, None] - self.zeros[None, :]), axis=1).reshape(z.shape)
        r = np.abs(z)
        th = np.angle(z)
        best = np.full(z.shape, np.inf)
        for alpha, mods in self.rays.items():
            c = np.cos(th - alpha)
            idx = np.searchsorted(mods, r * c)
            for j in (idx - 1, idx):
                rho = mods[np.clip(j, 0, len(mods) - 1)]
                d2 = r * r + rho * rho - 2.0 * r * rho * c
                best = np.minimum(best, np.sqrt(np.maximum(d2, 0.0)))
        best[self.is_zero(z)] = 0.0
        return best

    def is_zero(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.isin(z.ravel(), self.zeros).reshape(z.shape)

    def local_gap(self, r: np.ndarray) -> np.ndarray:
        m = self.moduli
        if len(m) < 2:
            return np.full(np.shape(r), np.inf)
        idx = np.clip(np.searchsorted(m, r), 1, len(m) - 1)
        return m[idx] - m[idx - 1]


@dataclass(frozen=True, eq=False)
class CanonicalProduct:
    zero_set: DiscreteSet | ComplexZeroSet
    construction: str
    strategy: str = "direct"
    _data: dict = field(default_factory=dict, repr=False)

    @property
    def truncation(self) -> int:
        src = self.zero_set if isinstance(self.zero_set, DiscreteSet) else self.zero_set.source
        if src is not None and src.n is not None:
            return src.n
        return len(self.zero_set)

    @property
    def zeros(self) -> np.ndarray:
        return self._data["zeros"]

    @property
    def index(self) -> _RayIndex:
        if "index" not in self._data:
            self._data["index"] = _RayIndex(self.zeros)
        return self._data["index"]

    @property
    def valid_radius(self) -> float:
        """Largest ``|z|`` at which evaluation is allowed (half the largest zero modulus)."""
        if not self.zero_set.has_tail:
            return math.inf
        return 0.5 * float(np.max(np.abs(self.zeros)))

    def check_radius(self, radius: float) -> None:
        if radius > self.valid_radius:
            src = self.zero_set if isinstance(self.zero_set, DiscreteSet) else self.zero_set.source
            raise TruncationError(
                f"|z| = {radius:g} exceeds half the largest zero modulus ({2 * self.valid_radius:g})",
                src.required_truncation(2.0 * radius) if src is not None else None,
            )

    def tail_bound(self, radius) -> np.ndarray:
        radius = np.asarray(radius, dtype=float)
        if self.construction == "quartic":
            return 2.0 * radius**4 * self.zero_set.tail_power_sum(4.0)
        return 2.0 * radius**3 * self.zero_set.tail_power_sum(3.0)

    def log_abs(self, z) -> np.ndarray:
        """``log|F(z)|``, vectorized, ``-inf`` exactly at zeros. No truncation check."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=float)
        with np.errstate(divide="ignore"):
            self._accumulate(flat, out)
        out[self.index.is_zero(flat)] = -np.inf
        return out.reshape(z.shape)

    def _accumulate(self, flat: np.ndarray, out: np.ndarray) -> None:
        if self.strategy == "direct" and self.construction == "genus2":
            inv = self._data["inv"]
            step = max(1, _CHUNK // max(len(inv), 1))
            for s in range(0, len(flat), step):
                w = flat[s : s + step, None] * inv[None, :]
                terms = 0.5 * np.log((1.0 - w.real) ** 2 + w.imag**2) + w.real + 0.5 * (w * w).real
                out[s : s + step] = log_product_accumulate(terms, axis=1)
        else:
            inv4 = self._data["inv4"]
            step = max(1, _CHUNK // max(len(inv4), 1))
            for s in range(0, len(flat), step):
                zz = flat[s : s + step]
                # z^4 from separate real ops: complex multiply may fuse and
                # break the exact |F(iz)| = |F(z)| = |F(conj z)| symmetry
                x, y = zz.real, zz.imag
                re2 = x * x - y * y
                im2 = 2.0 * x * y
                re4 = re2 * re2 - im2 * im2
                im4 = 2.0 * re2 * im2
                a = 1.0 - re4[:, None] * inv4[None, :]
                b = im4[:, None] * inv4[None, :]
                out[s : s + step] = log_product_accumulate(0.5 * np.log(a * a + b * b), axis=1)


def quartic_product(zero_set: DiscreteSet) -> CanonicalProduct:
    """``prod_{lambda} (1 - z^4/lambda^4)`` over a real set."""
    if not isinstance(zero_set, DiscreteSet):
        raise TypeError("the quartic construction needs a real DiscreteSet")
    lam = zero_set.points
    zeros = np.concatenate([lam * unit for unit in (1, 1j, -1, -1j)]).astype(complex)
    return CanonicalProduct(zero_set, "quartic", "orbit", {"inv4": 1.0 / lam**4, "zeros": zeros})


def _orbit_representatives(gamma: ComplexZeroSet) -> np.ndarray | None:
    """Positive moduli if ``gamma`` is ``Lambda u i*Lambda`` for a symmetric real set."""
    src = gamma.source
    if src is None or not src.is_symmetric:
        return None
    return src.positive


def genus2_product(gamma: ComplexZeroSet, strategy: str = "auto") -> CanonicalProduct:
    """Canonical product of genus 2 over a complex zero set.

    ``strategy="auto"`` pairs full rotation orbits when the set consists of
    them and falls back to factor-by-factor evaluation otherwise.
    """
    if np.any(gamma.points == 0):
        raise ValueError("zeros must be nonzero")
    reps = _orbit_representatives(gamma)
    if strategy == "auto":
        strategy = "orbit" if reps is not None else "direct"
    data = {"zeros": np.asarray(gamma.points, dtype=complex), "inv": 1.0 / np.asarray(gamma.points, dtype=complex)}
    if strategy == "orbit":
        if reps is None:
            raise ValueError("orbit strategy needs Gamma built from a symmetric real set")
        data["inv4"] = 1.0 / reps**4
    elif strategy != "direct":
        raise ValueError(f"unknown strategy {strategy!r}")
    return CanonicalProduct(gamma, "genus2", strategy, data)


@dataclass(frozen=True)
class ProductEval:
    log_abs: np.ndarray | float
    tail_bound: np.ndarray | float


def _evaluate(product: CanonicalProduct, z) -> ProductEval:
    z = np.asarray(z, dtype=complex)
    product.check_radius(float(np.max(np.abs(z))) if z.size else 0.0)
    vals = product.log_abs(z)
    tail = product.tail_bound(np.abs(z))
    if z.ndim == 0:
        return ProductEval(float(vals), float(tail))
    return ProductEval(vals, tail)


def quartic_product_eval(product: CanonicalProduct, z) -> ProductEval:
    """``log|prod(1 - z^4/lambda^4)|`` with the tail bound ``2|z|^4 sum_{n>N} lambda_n^-4``."""
    if product.construction != "quartic":
        raise ValueError("expected a quartic product")
    return _evaluate(product, z)


def genus2_product_eval(product: CanonicalProduct, z) -> ProductEval:
    """``log|prod E2(z/gamma)|`` with the tail bound ``2|z|^3 sum_{tail} |gamma|^-3``."""
    if product.construction != "genus2":
        raise ValueError("expected a genus-2 product")
    return _evaluate(product, z)


def indicator_target(delta: float, theta: float) -> float:
    """``pi * delta * |sin 2 theta|``."""
    if delta < 0:
        raise ValueError("density must be nonnegative")
    return math.pi * delta * abs(math.sin(2.0 * theta))


@dataclass(frozen=True)
class IndicatorEstimate:
    theta: float
    r_min: float
    r_max: float
    h_hat: float
    intercept: float
    residual: float  # standard error of the fitted slope
    rms: float  # rms of log|F| about the fitted line
    excluded_radii: np.ndarray

    @property
    def excluded_count(self) -> int:
        return len(self.excluded_radii)


def indicator_estimate(
    F,
    theta: float,
    window: tuple[float, float] = (20.0, 40.0),
    delta: float = 0.1,
    samples: int = 201,
) -> IndicatorEstimate:
    """Slope of ``log|F(r e^{i theta})|`` against ``r^2`` over a radius window.

    Sample points closer to a zero than ``min(delta, gap/4)`` are dropped,
    where ``gap`` is the local spacing of zero moduli. ``F`` is a
    :class:`CanonicalProduct` or any object with ``log_abs``.
    """
    r_min, r_max = map(float, window)
    if not 0 < r_min < r_max:
        raise ValueError("window must satisfy 0 < r_min < r_max")
    if not 0 <= theta < 2 * math.pi:
        raise ValueError("theta must lie in [0, 2*pi)")
    r = np.linspace(r_min, r_max, samples)
    z = r * np.exp(1j * theta)
    keep = np.ones(len(r), dtype=bool)
    if isinstance(F, CanonicalProduct):
        F.check_radius(r_max)
        index = F.index
        keep = index.distance(z) >= np.minimum(delta, 0.25 * index.local_gap(r))
    if keep.sum() < 5:
        raise ValueError(f"only {int(keep.sum())} usable radii after zero exclusion; need at least 5")
    values = np.asarray(F.log_abs(z[keep]), dtype=float)
    x = r[keep] ** 2
    slope, intercept = np.polyfit(x, values, 1)
    fitted = slope * x + intercept
    ssr = float(np.sum((values - fitted) ** 2))
    dof = max(len(x) - 2, 1)
    se = math.sqrt(ssr / dof / float(np.sum((x - x.mean()) ** 2)))
    return IndicatorEstimate(
        theta=theta,
        r_min=r_min,
        r_max=r_max,
        h_hat=float(slope),
        intercept=float(intercept),
        residual=se,
        rms=math.sqrt(ssr / len(x)),
        excluded_radii=r[~keep],
    )


@dataclass(frozen=True)
class ConvexityReport:
    theta: float
    total: float  # h(theta) + h(theta + pi/2)
    tolerance: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.total + self.tolerance


def trig_convexity_check(first: IndicatorEstimate, second: IndicatorEstimate) -> ConvexityReport:
    """``h(theta) + h(theta + pi/2) >= -(fit residuals)``."""
    gap = math.remainder(second.theta - first.theta - math.pi / 2, 2 * math.pi)
    if abs(gap) > 1e-12:
        raise ValueError("estimates must be taken at theta and theta + pi/2")
    total = first.h_hat + second.h_hat
    tol = first.residual + second.residual
    return ConvexityReport(first.theta, total, tol, total >= -tol)


@dataclass(frozen=True)
class FockProbeResult:
    delta: float  # density per side of the real set behind Gamma
    trend: FockNormTrend
    expected: str | None  # prediction from the density threshold, None at the critical density
    verdict: str  # classification, or "inconclusive" at the critical density
    consistent: bool | None

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "expected": self.expected,
            "verdict": self.verdict,
            "consistent": self.consistent,
            "trend": self.trend.as_dict(),
        }


def fock_membership_probe(
    product: CanonicalProduct,
    radii=(4.0, 8.0, 12.0),
    spec: QuadratureSpec = QuadratureSpec(atol=1e-300, rtol=1e-6),
) -> FockProbeResult:
    """Truncated Fock norms of ``Pi_Gamma`` and the verdict they support.

    Below density 1/2 per side the product should sit in the Fock space
    (converging), above it it cannot (diverging). Exactly at 1/2 nothing
    is predicted and the verdict is ``inconclusive``.
    """
    gamma = product.zero_set
    if product.construction != "genus2" or not isinstance(gamma, ComplexZeroSet):
        raise ValueError("the probe needs a genus-2 product over a complex zero set")
    src = gamma.source
    if src is None or src.generator != "sqrt" or not src.is_symmetric:
        raise ValueError("the probe needs Gamma built from a symmetric sqrt-grid set")
    radii = np.asarray(radii, dtype=float)
    product.check_radius(float(radii.max()))
    delta = src.delta_per_side / src.factor**2
    # Gamma from a symmetric set is invariant under z -> iz
    trend = fock_norm_trend(product, radii, spec, symmetry=4)
    if math.isclose(delta, 0.5, rel_tol=0, abs_tol=1e-12):
        expected, verdict, consistent = None, "inconclusive", None
    else:
        expected = "converging" if delta < 0.5 else "diverging"
        verdict = trend.classification
        consistent = verdict == expected
    return FockProbeResult(delta, trend, expected, verdict, consistent)


def probe_product(delta: float, max_radius: float, oversample: float = 4.0) -> CanonicalProduct:
    """Genus-2 product over ``Gamma = Lambda u i*Lambda`` for a symmetric sqrt-grid set
    whose largest modulus is ``oversample * max_radius``."""
    n = int(math.ceil(delta * (oversample * max_radius) ** 2))
    return genus2_product(union_with_rotation(generate_sqrt_set(delta, "symmetric", n)))


@dataclass(frozen=True)
class AnnihilationReport:
    values: np.ndarray  # log|F| at the sampled zeros
    shifted_values: np.ndarray  # log|F| at zeros + offset
    max_log: float
    annihilated: bool
    shifted_finite: bool


def annihilation_check(product: CanonicalProduct, sample, offset: float = 1e-3) -> AnnihilationReport:
    sample = np.asarray(sample, dtype=complex)
    values = product.log_abs(sample)
    shifted = product.log_abs(sample + offset)
    return AnnihilationReport(
        values=values,
        shifted_values=shifted,
        max_log=float(np.max(values)),
        annihilated=bool(np.all(np.isneginf(values))),
        shifted_finite=bool(np.all(np.isfinite(shifted))),
    )
