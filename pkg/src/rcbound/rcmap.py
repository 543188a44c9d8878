"""Parallel reaction-coordinate mapping of a spectral function.

Every support interval I_i is absorbed into one collective mode with energy
Omega_i and coupling lambda_i,

    Omega_i^2 = int_I w Gamma / int_I Gamma/w,
    lambda_i^2 = (1 / 2 pi Omega_i) int_I w Gamma,

leaving a residual coupling density Gamma_i(w) that lives only inside I_i and
shrinks with the interval width.  Intervals are chosen so each carries the
same w*Gamma weight, which makes all lambda_i^2 Omega_i identical.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import quadrature as quad
from .spectral import Band, SpectralFunction

__all__ = [
    "EdgeProximityWarning",
    "RcDecomposition",
    "RcMode",
    "decompose",
    "partition_equal_weight",
    "rc_parameters",
    "residual_bound",
    "residual_gamma",
]

_EDGE_ZONE = 1e-6  # fraction of the interval width treated as "at the edge"


class EdgeProximityWarning(UserWarning):
    """A value was clamped because it sits numerically on an interval edge."""


@dataclass(frozen=True)
class RcMode:
    """One reaction coordinate: its source interval, energy, and coupling."""

    index: int
    interval: Band
    omega_i: float
    lambda_i: float


@dataclass(frozen=True)
class RcDecomposition:
    """Result of the parallel mapping for one spectral function."""

    source: SpectralFunction
    modes: Tuple[RcMode, ...]

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def intervals(self) -> Tuple[Band, ...]:
        return tuple(m.interval for m in self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega_i for m in self.modes])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([m.lambda_i for m in self.modes])

    def rescaled(self, gamma: float) -> "RcDecomposition":
        """Same intervals and energies at a new amplitude.

        Omega_i is a ratio of integrals both linear in the amplitude, so it
        does not move; lambda_i scales with the square root.
        """
        factor = math.sqrt(gamma / self.source.gamma)
        modes = tuple(
            RcMode(m.index, m.interval, m.omega_i, factor * m.lambda_i)
            for m in self.modes)
        return RcDecomposition(self.source.with_amplitude(gamma), modes)


def _first_moment(sf: SpectralFunction, lo: float, hi: float) -> float:
    return quad.integrate(lambda w: w * sf(w), lo, hi,
                          points=sf.interior_points(lo, hi))


def partition_equal_weight(sf: SpectralFunction, n: int,
                           counts: Sequence[int] | None = None) -> List[Band]:
    """Split the support into cells of equal w*Gamma weight.

    Each band is partitioned separately; `counts` gives the number of cells
    per band (default: n in every band).  Boundaries are the monotone roots
    of the cumulative weight.
    """
    if n < 1:
        raise ValueError("cell count must be at least 1")
    if not sf.gapped and not math.isfinite(sf.support_upper):
        raise ValueError("equal-weight partition requires finite support")
    if counts is None:
        counts = [n] * len(sf.bands)
    if len(counts) != len(sf.bands) or any(c < 1 for c in counts):
        raise ValueError("counts must list one positive cell count per band")

    cells: List[Band] = []
    for band, n_band in zip(sf.bands, counts):
        total = _first_moment(sf, band.lo, band.hi)
        if not total > 0.0:
            raise ValueError(f"band [{band.lo}, {band.hi}] carries no weight")
        edges = [band.lo]
        acc = 0.0
        for k in range(1, n_band):
            target = k * total / n_band - acc

            def deficit(x: float) -> float:
                return _first_moment(sf, edges[-1], x) - target

            edge = optimize.brentq(deficit, edges[-1] + 1e-15 * band.width,
                                   band.hi, xtol=1e-14, rtol=8.9e-16)
            acc += _first_moment(sf, edges[-1], edge)
            edges.append(float(edge))
        edges.append(band.hi)
        cells.extend(Band(a, b) for a, b in zip(edges[:-1], edges[1:]))
    return cells


def rc_parameters(sf: SpectralFunction, interval: Band) -> Tuple[float, float]:
    """(Omega_i, lambda_i) of the reaction coordinate for one interval."""
    if interval.width <= 0.0:
        raise ValueError("interval has zero measure")
    knots = sf.interior_points(interval.lo, interval.hi)
    first = quad.integrate(lambda w: w * sf(w), interval.lo, interval.hi,
                           points=knots)
    inverse = quad.integrate(lambda w: sf(w) / w, interval.lo, interval.hi,
                             points=knots)
    if not (first > 0.0 and inverse > 0.0):
        raise ValueError(
            f"interval [{interval.lo}, {interval.hi}] carries no spectral weight")
    omega_i = math.sqrt(first / inverse)
    lambda_i = math.sqrt(first / (2.0 * math.pi * omega_i))
    return omega_i, lambda_i


def decompose(sf: SpectralFunction, n: int,
              counts: Sequence[int] | None = None) -> RcDecomposition:
    """Equal-weight partition plus RC parameters for every cell."""
    cells = partition_equal_weight(sf, n, counts)
    modes = []
    for i, cell in enumerate(cells, start=1):
        omega_i, lambda_i = rc_parameters(sf, cell)
        modes.append(RcMode(i, cell, omega_i, lambda_i))
    return RcDecomposition(sf, tuple(modes))


def residual_gamma(sf: SpectralFunction, decomposition: RcDecomposition,
                   i: int, omega: float) -> float:
    """Residual coupling density Gamma_i(omega) of the i-th reaction coordinate.

    Gamma_i = 4 lambda_i^2 Gamma / (Gamma^2 + H^2) with H the principal value
    (1/pi) P int over I_i and its mirror image of Gamma(w')/(w' - omega); the
    mirrored piece uses the odd continuation and has no pole.  Defined as 0
    outside I_i; within 1e-6 of the width from an edge the log-divergent
    denominator forces the value to 0, which is flagged.
    """
    mode = decomposition.modes[i - 1]
    if mode.index != i:
        raise ValueError("decomposition mode indices are inconsistent")
    lo, hi = mode.interval.lo, mode.interval.hi
    zone = _EDGE_ZONE * mode.interval.width
    if omega <= lo - zone or omega >= hi + zone:
        return 0.0
    if omega <= lo + zone or omega >= hi - zone:
        warnings.warn(
            f"Gamma_{i} evaluated on the edge zone of [{lo}, {hi}]; returning 0",
            EdgeProximityWarning, stacklevel=2)
        return 0.0

    knots = sf.interior_points(lo, hi)
    direct = quad.cauchy_pv(sf, lo, hi, omega, points=knots)
    mirrored = quad.integrate(lambda u: sf(u) / (u + omega), lo, hi,
                              points=knots)
    hilbert = (direct + mirrored) / math.pi
    g = sf(omega)
    return 4.0 * mode.lambda_i**2 * g / (g * g + hilbert * hilbert)


def residual_bound(delta_omega: float) -> float:
    """Asymptotic ceiling 2 * delta_omega / pi of the residual density."""
    if delta_omega <= 0.0:
        raise ValueError("interval width must be positive")
    return 2.0 * delta_omega / math.pi
