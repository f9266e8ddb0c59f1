"""Discrete real sets of translation nodes and their order-2 statistics.

A :class:`DiscreteSet` is a finite truncation of an infinite generator
(or an explicit finite list). Densities are counts per squared radius,
``n(r) / r**2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import zeta

__all__ = [
    "DiscreteSet",
    "DensityReport",
    "SeriesReport",
    "ComplexZeroSet",
    "generate_sqrt_set",
    "generate_arithmetic_set",
    "explicit_set",
    "counting_function",
    "density_estimate",
    "s_epsilon",
    "scale",
    "union_with_rotation",
    "angular_density",
    "pair_sum_check",
]

PATTERNS = ("positive", "negative", "symmetric")


def _sort_key(x: float) -> tuple[float, int]:
    # equal moduli: positive point first
    return (abs(x), 0 if x > 0 else 1)


@dataclass(frozen=True)
class DiscreteSet:
    """Nonzero real points sorted by modulus, plus how they were generated.

    ``generator`` is ``"sqrt"`` (points ``s*sqrt(n/delta)``), ``"arithmetic"``
    (points ``s*n*step``) or ``"explicit"`` (a complete finite set). ``n`` is
    the truncation size per side for generated sets. ``factor`` records a
    global scaling applied after generation.
    """

    points: np.ndarray
    generator: str = "explicit"
    pattern: str | None = None
    delta_per_side: float | None = None
    step: float | None = None
    n: int | None = None
    factor: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1:
            raise ValueError("points must be one-dimensional")
        if np.any(pts == 0):
            raise ValueError("0 is not allowed as a node")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if len(np.unique(pts)) != len(pts):
            raise ValueError("duplicate points are not allowed")
        ordered = np.array(sorted(pts.tolist(), key=_sort_key), dtype=float)
        ordered.setflags(write=False)
        object.__setattr__(self, "points", ordered)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def positive(self) -> np.ndarray:
        return self.points[self.points > 0]

    @property
    def negative(self) -> np.ndarray:
        return self.points[self.points < 0]

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.points)

    @property
    def max_modulus(self) -> float:
        return float(self.moduli[-1]) if len(self) else 0.0

    @property
    def is_symmetric(self) -> bool:
        pos = np.sort(self.positive)
        neg = np.sort(-self.negative)
        return len(pos) == len(neg) and np.array_equal(pos, neg)

    @property
    def has_tail(self) -> bool:
        """True when the set is a truncation of an infinite generator."""
        return self.generator != "explicit"

    @property
    def sides(self) -> int:
        return 2 if self.pattern == "symmetric" else 1

    @property
    def nominal_density(self) -> float | None:
        """Density of the full (untruncated) set, all sides together."""
        if self.generator == "sqrt":
            return self.sides * self.delta_per_side / self.factor**2
        if self.generator in ("arithmetic", "explicit"):
            return 0.0
        return None

    def tail_power_sum(self, p: float) -> float:
        """``sum |lambda|^-p`` over generator points beyond the truncation."""
        if not self.has_tail:
            return 0.0
        c = abs(self.factor)
        if self.generator == "sqrt":
            s = p / 2.0
            if s <= 1:
                return math.inf
            return self.sides * self.delta_per_side**s * float(zeta(s, self.n + 1)) / c**p
        if self.generator == "arithmetic":
            if p <= 1:
                return math.inf
            return self.sides * float(zeta(p, self.n + 1)) / (self.step * c) ** p
        raise ValueError(f"unknown generator {self.generator!r}")

    def required_truncation(self, radius: float) -> int:
        """Smallest per-side truncation whose largest modulus reaches ``radius``."""
        c = abs(self.factor)
        if self.generator == "sqrt":
            return int(math.ceil(self.delta_per_side * (radius / c) ** 2))
        if self.generator == "arithmetic":
            return int(math.ceil(radius / (c * self.step)))
        return len(self)

    def head(self, count: int) -> DiscreteSet:
        """The ``count`` smallest-modulus points, as an explicit set."""
        return DiscreteSet(self.points[:count])

    def to_json(self) -> str:
        pts = ", ".join(format(float(p), ".17g") for p in self.points)
        header = json.dumps(
            {
                "generator": self.generator,
                "delta_per_side": self.delta_per_side,
                "pattern": self.pattern,
                "n": self.n,
                "step": self.step,
                "factor": self.factor,
            }
        )
        return header[:-1] + f', "points": [{pts}]}}'

    @classmethod
    def from_json(cls, text: str) -> DiscreteSet:
        data = json.loads(text)
        return cls(
            points=np.array(data["points"], dtype=float),
            generator=data.get("generator", "explicit"),
            pattern=data.get("pattern"),
            delta_per_side=data.get("delta_per_side"),
            step=data.get("step"),
            n=data.get("n"),
            factor=data.get("factor", 1.0),
        )


def _signed(magnitudes: np.ndarray, pattern: str) -> np.ndarray:
    if pattern == "positive":
        return magnitudes
    if pattern == "negative":
        return -magnitudes
    if pattern == "symmetric":
        return np.concatenate([magnitudes, -magnitudes])
    raise ValueError(f"pattern must be one of {PATTERNS}, got {pattern!r}")


def generate_sqrt_set(delta: float, pattern: str, n: int) -> DiscreteSet:
    """Points ``s*sqrt(k/delta)``, ``1 <= k <= n``, for each sign ``s`` in ``pattern``.

    Each side has exact density ``delta``.
    """
    if not delta > 0:
        raise ValueError("density must be positive")
    if n < 1:
        raise ValueError("truncation must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    mags = np.sqrt(k / delta)
    return DiscreteSet(_signed(mags, pattern), "sqrt", pattern, float(delta), None, int(n))


def generate_arithmetic_set(step: float, pattern: str, n: int) -> DiscreteSet:
    """Points ``s*k*step``; order one, so density zero."""
    if not step > 0:
        raise ValueError("step must be positive")
    if n < 1:
        raise ValueError("truncation must be >= 1")
    mags = step * np.arange(1, n + 1, dtype=float)
    return DiscreteSet(_signed(mags, pattern), "arithmetic", pattern, None, float(step), int(n))


def explicit_set(points: Sequence[float]) -> DiscreteSet:
    return DiscreteSet(np.asarray(points, dtype=float))


def counting_function(s: DiscreteSet, r: float) -> int:
    """Number of points with modulus strictly below ``r``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return int(np.searchsorted(s.moduli, r, side="left"))


def _counts(moduli: np.ndarray, radii: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(moduli), radii, side="left")


@dataclass(frozen=True)
class DensityReport:
    radii: np.ndarray
    counts: np.ndarray
    density: float
    density_positive: float
    density_negative: float
    residual: float
    # max/min of windowed ratios n(r)/r**2 (experimental)
    upper: float
    lower: float


def _fit_through_origin(r2: np.ndarray, counts: np.ndarray) -> float:
    return float(np.dot(counts, r2) / np.dot(r2, r2))


def _check_grid(radii: np.ndarray, limit: float, what: str = "set") -> None:
    if radii.ndim != 1 or len(radii) == 0:
        raise ValueError("radius grid must be a non-empty 1-D sequence")
    if np.any(radii <= 0):
        raise ValueError("radius grid must be positive")
    if np.max(radii) > limit:
        raise ValueError(
            f"radius grid reaches {np.max(radii):g} beyond the largest modulus {limit:g} of the {what}; "
            "counts saturate past the truncation and would bias the density"
        )


def default_grid(s: DiscreteSet, points: int = 41) -> np.ndarray:
    top = s.max_modulus
    return np.linspace(0.1 * top, 0.9 * top, points)


def density_estimate(s: DiscreteSet, radii=None) -> DensityReport:
    """Least-squares fit of ``n(r) ~ density * r**2`` over a radius grid."""
    radii = default_grid(s) if radii is None else np.asarray(radii, dtype=float)
    _check_grid(radii, s.max_modulus)
    r2 = radii**2
    counts = _counts(s.moduli, radii)
    dens = _fit_through_origin(r2, counts)
    pos = _fit_through_origin(r2, _counts(s.positive, radii))
    neg = _fit_through_origin(r2, _counts(-s.negative, radii))
    ratios = counts / r2
    residual = float(np.sqrt(np.mean((ratios - dens) ** 2)))
    return DensityReport(radii, counts, dens, pos, neg, residual, float(ratios.max()), float(ratios.min()))


@dataclass(frozen=True)
class SeriesReport:
    epsilon: float
    partial_sum: float
    tail_bound: float
    classification: str  # "diverging" | "converging"
    order: float | None


def s_epsilon(s: DiscreteSet, epsilon: float) -> SeriesReport:
    """Partial sum of ``sum |lambda|^-(2+epsilon)`` with a divergence diagnosis.

    The classification uses the generator: a sqrt-grid set has order 2, so
    the series diverges exactly at ``epsilon == 0``; arithmetic sets have
    order 1 and explicit sets are finite.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    p = 2.0 + epsilon
    partial = math.fsum((1.0 / np.abs(s.points) ** p).tolist())
    order = {"sqrt": 2.0, "arithmetic": 1.0, "explicit": 0.0}.get(s.generator)
    tail = s.tail_power_sum(p)
    if order is not None and p <= order:
        classification = "diverging"
        tail = math.inf
    else:
        classification = "converging"
    return SeriesReport(epsilon, partial, tail, classification, order)


def scale(s: DiscreteSet, c: float) -> DiscreteSet:
    """The set ``{c * lambda}``; density scales by ``1 / c**2``."""
    if c == 0:
        raise ValueError("scale factor must be nonzero")
    pattern = s.pattern
    if c < 0 and pattern in ("positive", "negative"):
        pattern = "negative" if pattern == "positive" else "positive"
    return DiscreteSet(
        s.points * c, s.generator, pattern, s.delta_per_side, s.step, s.n, s.factor * abs(c)
    )


@dataclass(frozen=True)
class ComplexZeroSet:
    """Complex zero set built from a real set; ``source`` keeps the generator."""

    points: np.ndarray
    source: DiscreteSet | None = None
    sector_counts: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.points)

    @property
    def max_modulus(self) -> float:
        return float(np.max(self.moduli)) if len(self) else 0.0

    @property
    def has_tail(self) -> bool:
        return self.source is not None and self.source.has_tail

    def tail_power_sum(self, p: float) -> float:
        # Gamma = Lambda u i*Lambda doubles every tail term
        if self.source is None:
            return 0.0
        return 2.0 * self.source.tail_power_sum(p)


def _sector_table(points: np.ndarray) -> dict:
    args = np.mod(np.angle(points), 2 * np.pi)
    table = {}
    for k, name in enumerate(("ray_0", "ray_pi/2", "ray_pi", "ray_3pi/2")):
        table[name] = int(np.sum(np.isclose(args, k * np.pi / 2, atol=1e-15)))
    for k, name in enumerate(("quadrant_1", "quadrant_2", "quadrant_3", "quadrant_4")):
        lo, hi = k * np.pi / 2, (k + 1) * np.pi / 2
        inside = (args > lo) & (args < hi) & ~np.isclose(args, lo, atol=1e-15) & ~np.isclose(args, hi, atol=1e-15)
        table[name] = int(np.sum(inside))
    return table


def union_with_rotation(s: DiscreteSet) -> ComplexZeroSet:
    """``Gamma = Lambda u i*Lambda``, ordered by modulus with each ``lambda`` next to ``i*lambda``."""
    if len(s) == 0:
        raise ValueError("set must be nonempty")
    real = s.points.astype(complex)
    rotated = 1j * s.points
    pts = np.empty(2 * len(s), dtype=complex)
    pts[0::2] = real
    pts[1::2] = rotated
    pts.setflags(write=False)
    return ComplexZeroSet(pts, s, _sector_table(pts))


def angular_density(gamma: ComplexZeroSet, theta: float, radii=None) -> float:
    """Fit of ``#{|z| < r, arg z < theta}`` against ``r**2``.

    Arguments are taken in ``[0, 2*pi)``; a ray ``arg z = k*pi/2`` counts as
    soon as ``theta`` exceeds ``k*pi/2``.
    """
    if not 0 <= theta < 2 * np.pi:
        raise ValueError("theta must lie in [0, 2*pi)")
    limit = gamma.source.max_modulus if gamma.source is not None else gamma.max_modulus
    if radii is None:
        radii = np.linspace(0.1 * limit, 0.9 * limit, 41)
    radii = np.asarray(radii, dtype=float)
    _check_grid(radii, limit, "zero set")
    args = np.mod(np.angle(gamma.points), 2 * np.pi)
    # snap rays exactly so that rounding in angle() cannot move them across theta
    quarter = np.round(args / (np.pi / 2))
    on_ray = np.abs(args - quarter * np.pi / 2) < 1e-12
    args = np.where(on_ray, np.mod(quarter, 4) * np.pi / 2, args)
    selected = gamma.moduli[args < theta]
    counts = _counts(selected, radii)
    return _fit_through_origin(radii**2, counts)


def pair_sum_check(gamma: ComplexZeroSet, radii=None) -> float:
    """Max over the grid of ``|sum_{|g| < r} 1/g**2|``."""
    mod = gamma.moduli
    if radii is None:
        # midpoints between consecutive distinct moduli, plus one radius past the end
        distinct = np.unique(mod)
        radii = np.concatenate([0.5 * (distinct[:-1] + distinct[1:]), [distinct[-1] + 1.0]])
        if len(radii) > 200:
            radii = radii[np.linspace(0, len(radii) - 1, 200).astype(int)]
    radii = np.asarray(radii, dtype=float)
    order = np.argsort(mod, kind="stable")
    inv_sq = 1.0 / gamma.points[order] ** 2
    sorted_mod = mod[order]
    worst = 0.0
    for r in radii:
        k = int(np.searchsorted(sorted_mod, r, side="left"))
        part = inv_sq[:k]
        total = complex(math.fsum(part.real.tolist()), math.fsum(part.imag.tolist()))
        worst = max(worst, abs(total))
    return worst
