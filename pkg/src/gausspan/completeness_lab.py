"""Finite-section completeness experiments for Gaussian translates.

The span of ``{phi(. - lambda)}`` over the ``N`` smallest-modulus nodes is
probed through the squared distance from a target Gaussian to that span,
computed from the Gram system with a spectral cutoff. Finite sections can
only show orderings and plateaus; they never certify non-spanning.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import gaussian_kernel as gk
from .lambda_sets import DiscreteSet, generate_sqrt_set, scale
from .numerics import SpectralSolveReport, spd_truncated_solve

__all__ = [
    "GramSystem",
    "Projection",
    "ResidualCurve",
    "PhaseTable",
    "TransferResult",
    "build_gram",
    "project",
    "residual_curve",
    "phase_transition_experiment",
    "l1_transfer_experiment",
    "DEFAULT_TARGET",
    "DEFAULT_CUTOFF",
]

log = logging.getLogger(__name__)

DEFAULT_TARGET = gk.translate(0.5)
DEFAULT_CUTOFF = 1e-12
CLIP_LIMIT = 1e-8
INV_SQRT2 = 2.0**-0.5


class ResidualClipError(ArithmeticError):
    """Negative squared residual beyond rounding: the solve broke down."""


@dataclass(frozen=True)
class GramSystem:
    nodes: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    target: gk.GaussianFn
    eigenvalues: np.ndarray
    retained_rank: int
    condition: float

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0]) if len(self.eigenvalues) else math.nan


def build_gram(nodes, target: gk.GaussianFn = DEFAULT_TARGET, cutoff: float = DEFAULT_CUTOFF) -> GramSystem:
    """Gram matrix of unit translates at ``nodes`` and the target's inner products with them."""
    pts = np.asarray(nodes.points if isinstance(nodes, DiscreteSet) else nodes, dtype=float)
    if len(np.unique(pts)) != len(pts):
        raise ValueError("nodes must be distinct")
    diff = pts[:, None] - pts[None, :]
    G = INV_SQRT2 * np.exp(-np.pi * diff**2 / 2.0)
    np.fill_diagonal(G, INV_SQRT2)
    b = np.array([gk.inner_product(target, gk.translate(float(p))) for p in pts])
    w = np.linalg.eigvalsh(G) if len(pts) else np.zeros(0)
    top = float(w[-1]) if len(w) else 0.0
    kept = w[w > cutoff * top] if top > 0 else w[:0]
    cond = top / float(kept[0]) if len(kept) else math.inf
    return GramSystem(pts, G, b, target, w, int(len(kept)), cond)


@dataclass(frozen=True)
class Projection:
    residual_sq: float
    clip: float  # amount by which a negative residual was raised to 0
    solve: SpectralSolveReport
    degenerate: bool


def project(system: GramSystem, target_norm_sq: float | None = None, cutoff: float = DEFAULT_CUTOFF) -> Projection:
    """Squared distance ``||f||^2 - b.x`` from the target to the span of the nodes."""
    if target_norm_sq is None:
        target_norm_sq = gk.norm_squared(system.target)
    if target_norm_sq < 0:
        raise ValueError("target norm must be nonnegative")
    # solve in sorted node order so the rounding, and hence d2, does not
    # depend on how the caller ordered the nodes
    order = np.argsort(system.nodes, kind="stable")
    rhs = system.rhs[order]
    report = spd_truncated_solve(system.matrix[np.ix_(order, order)], rhs, cutoff)
    if report.degenerate:
        return Projection(target_norm_sq, 0.0, report, True)
    d2 = target_norm_sq - float(np.dot(rhs, report.solution))
    coeffs = np.empty_like(report.solution)
    coeffs[order] = report.solution
    report = replace(report, solution=coeffs)
    clip = 0.0
    if d2 < 0:
        clip = -d2
        log.debug("clipped residual by %.3g", clip)
        if clip > CLIP_LIMIT:
            raise ResidualClipError(f"squared residual {d2:.3g} is negative beyond rounding")
        d2 = 0.0
    elif d2 > target_norm_sq:
        d2 = target_norm_sq
    return Projection(d2, clip, report, False)


@dataclass(frozen=True)
class ResidualCurve:
    """Squared residuals along a truncation schedule.

    ``solve_residuals`` are the raw spectral-solve values. A relative cutoff
    can discard directions once more nodes raise the top eigenvalue, so these
    need not decrease. ``residuals`` is the best approximant available from
    the nested spans: the current solve, or the previous approximant padded
    with zero coefficients (``carried``).
    """

    sizes: np.ndarray
    residuals: np.ndarray
    ranks: np.ndarray
    clips: np.ndarray
    target: gk.GaussianFn
    cutoff: float
    source: dict = field(default_factory=dict)
    solve_residuals: np.ndarray | None = None
    carried: np.ndarray | None = None

    @property
    def terminal(self) -> float:
        return float(self.residuals[-1])

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.residuals) <= 1e-10))

    def as_dict(self) -> dict:
        return {
            "sizes": self.sizes.tolist(),
            "residual_sq": self.residuals.tolist(),
            "retained_rank": self.ranks.tolist(),
            "clip": self.clips.tolist(),
            "solve_residual_sq": None if self.solve_residuals is None else self.solve_residuals.tolist(),
            "carried": None if self.carried is None else self.carried.tolist(),
            "target": {"amplitude": self.target.amplitude, "width": self.target.width, "center": self.target.center},
            "cutoff": self.cutoff,
            "source": self.source,
        }


def _per_side_density(s: DiscreteSet) -> float | None:
    if s.generator != "sqrt":
        return None
    return s.delta_per_side / s.factor**2


def _describe(s: DiscreteSet) -> dict:
    return {
        "generator": s.generator,
        "pattern": s.pattern,
        "delta_per_side": s.delta_per_side,
        "factor": s.factor,
        "n": s.n,
        "nominal_density": s.nominal_density,
    }


def residual_curve(
    nodes: DiscreteSet,
    target: gk.GaussianFn = DEFAULT_TARGET,
    sizes: Sequence[int] = (10, 20, 40, 60),
    cutoff: float = DEFAULT_CUTOFF,
) -> ResidualCurve:
    """Residuals against the spans of the first ``N`` nodes, for each ``N`` in ``sizes``."""
    sizes = np.asarray(sizes, dtype=int)
    if np.any(np.diff(sizes) <= 0) or sizes[0] < 1:
        raise ValueError("sizes must be positive and strictly increasing")
    if sizes[-1] > len(nodes):
        raise ValueError(f"set has only {len(nodes)} points, schedule needs {sizes[-1]}")
    norm_sq = gk.norm_squared(target)
    raw, best, carried, ranks, clips = [], [], [], [], []
    for n in sizes:
        system = build_gram(nodes.points[:n], target, cutoff)
        proj = project(system, norm_sq, cutoff)
        raw.append(proj.residual_sq)
        # zero-padding the previous coefficients reproduces its residual exactly
        keep_previous = bool(best) and best[-1] < proj.residual_sq
        if keep_previous:
            log.debug("N=%d: solve residual %.3g above nested bound %.3g", n, proj.residual_sq, best[-1])
        best.append(best[-1] if keep_previous else proj.residual_sq)
        carried.append(keep_previous)
        ranks.append(proj.solve.retained)
        clips.append(proj.clip)
    return ResidualCurve(
        sizes,
        np.array(best),
        np.array(ranks),
        np.array(clips),
        target,
        cutoff,
        _describe(nodes),
        np.array(raw),
        np.array(carried),
    )


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PhaseTable:
    deltas: np.ndarray
    n_max: int
    curves: list
    cutoff: float
    pattern: str

    @property
    def residuals(self) -> np.ndarray:
        return np.array([c.terminal for c in self.curves])

    @property
    def non_increasing(self) -> bool:
        order = np.argsort(self.deltas)
        return bool(np.all(np.diff(self.residuals[order]) <= 1e-10))

    def rows(self) -> list[dict]:
        return [
            {
                "delta": float(d),
                "n_max": self.n_max,
                "residual_sq": c.terminal,
                "retained_rank": int(c.ranks[-1]),
                "cutoff": self.cutoff,
                "clip": float(c.clips[-1]),
            }
            for d, c in zip(self.deltas, self.curves)
        ]


def _default_sizes(n_max: int) -> list[int]:
    sizes = sorted({max(1, n_max // 6), n_max // 3, (2 * n_max) // 3, n_max} - {0})
    return sizes


def phase_transition_experiment(
    deltas: Sequence[float],
    target: gk.GaussianFn = DEFAULT_TARGET,
    n_max: int = 60,
    sizes: Sequence[int] | None = None,
    pattern: str = "symmetric",
    cutoff: float = DEFAULT_CUTOFF,
) -> PhaseTable:
    """Terminal residuals of sqrt-grid node sets across densities.

    ``deltas`` are densities per side. Cells are independent; with
    ``LAB_THREADS > 1`` they run concurrently and are collected in grid order.
    """
    sizes = list(sizes) if sizes is not None else _default_sizes(n_max)
    if sizes[-1] != n_max:
        raise ValueError("schedule must end at n_max")
    per_side = n_max if pattern != "symmetric" else (n_max + 1) // 2

    def cell(d: float) -> ResidualCurve:
        return residual_curve(generate_sqrt_set(float(d), pattern, per_side), target, sizes, cutoff)

    deltas = [float(d) for d in deltas]
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            curves = list(pool.map(cell, deltas))
    else:
        curves = [cell(d) for d in deltas]
    return PhaseTable(np.array(deltas), n_max, curves, cutoff, pattern)


@dataclass(frozen=True)
class TransferResult:
    a: float
    original: ResidualCurve
    scaled: ResidualCurve
    original_density: float | None  # per side
    scaled_density: float | None


def l1_transfer_experiment(
    nodes: DiscreteSet,
    a: float,
    target: gk.GaussianFn = DEFAULT_TARGET,
    sizes: Sequence[int] = (10, 20, 40, 60),
    cutoff: float = DEFAULT_CUTOFF,
) -> TransferResult:
    """Residual curves for ``Lambda`` and ``Lambda / sqrt(a)``.

    Scaling by ``1/sqrt(a)`` multiplies the density by ``a``; only that
    relation between the two curves is measured.
    """
    if not a > 1:
        raise ValueError("need a > 1")
    shrunk = scale(nodes, 1.0 / math.sqrt(a))
    return TransferResult(
        a,
        residual_curve(nodes, target, sizes, cutoff),
        residual_curve(shrunk, target, sizes, cutoff),
        _per_side_density(nodes),
        _per_side_density(shrunk),
    )
