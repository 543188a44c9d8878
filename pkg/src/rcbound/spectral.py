"""Reservoir spectral functions with band gaps, plus shared system parameters.

All spectral functions are odd, Gamma(-w) = -Gamma(w), and vanish identically
inside their gaps.  Frequencies are positive reals; temperature enters only
through the Bose occupation.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np

__all__ = [
    "Band",
    "SpectralFunction",
    "SystemParams",
    "band_gaps",
    "bose_occupation",
    "eval_gamma",
]


@dataclass(frozen=True)
class Band:
    """Closed frequency interval [lo, hi] of strictly positive weight."""

    lo: float
    hi: float

    def __post_init__(self):
        if not 0.0 <= self.lo < self.hi:
            raise ValueError(f"band must satisfy 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, omega: float, strict: bool = False) -> bool:
        if strict:
            return self.lo < omega < self.hi
        return self.lo <= omega <= self.hi


@dataclass(frozen=True)
class SystemParams:
    """System oscillator frequency and reservoir temperature (k_B = 1)."""

    omega: float
    temperature: float = 0.0

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("system frequency must be positive")
        if self.temperature < 0.0:
            raise ValueError("temperature must be non-negative")


def bose_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation n(w) = 1/(exp(w/T) - 1); 0 at T = 0."""
    if omega <= 0.0:
        raise ValueError("occupation requires a positive frequency")
    if temperature < 0.0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0.0:
        return 0.0
    return 1.0 / math.expm1(omega / temperature)


def _rubin_shape(u: np.ndarray) -> np.ndarray:
    # unit-amplitude, unit-cutoff band shape u*sqrt(1-u^2) on [0, 1]
    inside = (u >= 0.0) & (u <= 1.0)
    u = np.where(inside, u, 0.0)
    return np.where(inside, u * np.sqrt(1.0 - u * u), 0.0)


@dataclass(frozen=True)
class SpectralFunction:
    """Reservoir spectral function Gamma(w) >= 0 with explicit band structure.

    kind is one of "rubin", "drude_gapless", "shifted_sum", "tabulated".
    `gamma` is the overall amplitude; analytic kinds scale linearly with it.
    """

    kind: str
    gamma: float
    omega_c: float = 1.0
    offsets: Tuple[float, ...] = ()
    table: Tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    bands: Tuple[Band, ...] = ()

    # -- constructors ------------------------------------------------------

    @classmethod
    def rubin(cls, gamma: float, omega_c: float = 1.0) -> "SpectralFunction":
        """Single band Gamma * (w/w_c) * sqrt(1 - w^2/w_c^2) on [0, w_c]."""
        _check_positive(gamma=gamma, omega_c=omega_c)
        return cls(kind="rubin", gamma=gamma, omega_c=omega_c,
                   bands=(Band(0.0, omega_c),))

    @classmethod
    def drude_gapless(cls, gamma: float, omega_c: float = 1.0) -> "SpectralFunction":
        """Gapless reference Gamma * w * w_c / (w^2 + w_c^2) on (0, inf)."""
        _check_positive(gamma=gamma, omega_c=omega_c)
        return cls(kind="drude_gapless", gamma=gamma, omega_c=omega_c,
                   bands=(Band(0.0, math.inf),))

    @classmethod
    def shifted_sum(cls, gamma: float, omega_c: float = 1.0,
                    offsets: Sequence[float] = (1.5,)) -> "SpectralFunction":
        """Sum of the single-band shape plus copies shifted by each offset.

        The unshifted copy is always included.  Copies must leave strict gaps
        between consecutive bands.
        """
        _check_positive(gamma=gamma, omega_c=omega_c)
        shifts = (0.0,) + tuple(float(o) for o in offsets)
        if sorted(shifts) != list(shifts) or len(set(shifts)) != len(shifts):
            raise ValueError("offsets must be strictly increasing and positive")
        bands = []
        for s in shifts:
            if bands and s <= bands[-1].hi:
                raise ValueError(
                    f"shifted band at offset {s} overlaps or touches the previous band")
            bands.append(Band(s, s + omega_c))
        return cls(kind="shifted_sum", gamma=gamma, omega_c=omega_c,
                   offsets=shifts, bands=tuple(bands))

    @classmethod
    def tabulated(cls, omega: Sequence[float], values: Sequence[float]) -> "SpectralFunction":
        """Piecewise-linear spectral function from (omega, gamma) samples.

        Bands are the maximal runs of strictly positive samples; the function
        is assumed continuous to zero at band edges.
        """
        w = np.asarray(omega, dtype=float)
        g = np.asarray(values, dtype=float)
        if w.ndim != 1 or w.shape != g.shape or w.size < 2:
            raise ValueError("tabulated data must be two equal-length 1-d arrays")
        if np.any(np.diff(w) <= 0.0):
            raise ValueError("tabulated frequencies must be strictly increasing")
        if w[0] < 0.0:
            raise ValueError("tabulated frequencies must be non-negative")
        if np.any(g < 0.0):
            raise ValueError("tabulated values must be non-negative")
        if not np.any(g > 0.0):
            raise ValueError("tabulated spectral function is identically zero")
        bands = _runs_to_bands(w, g)
        return cls(kind="tabulated", gamma=1.0, omega_c=float(w[-1]),
                   table=(w, g), bands=tuple(bands))

    @classmethod
    def tabulated_from_csv(cls, path: str | Path) -> "SpectralFunction":
        # strip comment lines by hand: genfromtxt(names=True) would otherwise
        # read a leading comment as the header row
        lines = [ln for ln in Path(path).read_text().splitlines()
                 if ln.strip() and not ln.lstrip().startswith("#")]
        data = np.genfromtxt(io.StringIO("\n".join(lines)), delimiter=",", names=True)
        return cls.tabulated(data["omega"], data["gamma"])

    # -- evaluation --------------------------------------------------------

    def __call__(self, omega):
        """Evaluate Gamma(omega) with odd continuation; exactly 0 inside gaps."""
        w = np.asarray(omega, dtype=float)
        sign = np.sign(w)
        a = np.abs(w)
        if self.kind == "rubin":
            out = self.gamma * _rubin_shape(a / self.omega_c)
        elif self.kind == "drude_gapless":
            out = self.gamma * a * self.omega_c / (a * a + self.omega_c**2)
        elif self.kind == "shifted_sum":
            out = np.zeros_like(a)
            for s in self.offsets:
                out += self.gamma * _rubin_shape((a - s) / self.omega_c)
        elif self.kind == "tabulated":
            tw, tg = self.table
            if np.any(a > tw[-1]) or np.any(a < tw[0]):
                raise ValueError("tabulated spectral function queried outside sample hull")
            out = self.gamma * np.interp(a, tw, tg)
        else:  # pragma: no cover - constructors forbid this
            raise ValueError(f"unknown spectral kind {self.kind!r}")
        out = sign * out
        return float(out) if np.isscalar(omega) else out

    # -- structure ---------------------------------------------------------

    @property
    def gapped(self) -> bool:
        return all(math.isfinite(b.hi) for b in self.bands)

    @property
    def support_upper(self) -> float:
        return self.bands[-1].hi

    def gaps(self, omega_max: float) -> List[Tuple[float, float]]:
        """Complement of the band union within (0, omega_max]."""
        if omega_max <= 0.0:
            raise ValueError("omega_max must be positive")
        out: List[Tuple[float, float]] = []
        cursor = 0.0
        for b in self.bands:
            lo = min(b.lo, omega_max)
            if lo > cursor:
                out.append((cursor, lo))
            cursor = max(cursor, min(b.hi, omega_max))
            if cursor >= omega_max:
                return out
        if cursor < omega_max:
            out.append((cursor, omega_max))
        return out

    def band_containing(self, omega: float) -> Band | None:
        for b in self.bands:
            if b.contains(omega):
                return b
        return None

    def interior_points(self, lo: float, hi: float) -> Tuple[float, ...]:
        """Sample frequencies strictly inside (lo, hi); empty for analytic kinds.

        The linear interpolant has derivative jumps at the samples, so
        quadrature must split integrals there to converge.
        """
        if self.kind != "tabulated":
            return ()
        w = self.table[0]
        return tuple(float(x) for x in w[(w > lo) & (w < hi)])

    def with_amplitude(self, gamma: float) -> "SpectralFunction":
        """Copy with a new overall amplitude (band structure unchanged)."""
        _check_positive(gamma=gamma)
        return SpectralFunction(kind=self.kind, gamma=gamma, omega_c=self.omega_c,
                                offsets=self.offsets, table=self.table, bands=self.bands)


def _runs_to_bands(w: np.ndarray, g: np.ndarray) -> List[Band]:
    bands: List[Band] = []
    n = w.size
    i = 0
    while i < n:
        if g[i] > 0.0:
            j = i
            while j + 1 < n and g[j + 1] > 0.0:
                j += 1
            lo = w[i - 1] if i > 0 else w[i]
            hi = w[j + 1] if j + 1 < n else w[j]
            if bands and lo <= bands[-1].hi:
                # a single zero sample is a node inside one band, not a gap
                bands[-1] = Band(bands[-1].lo, float(hi))
            else:
                bands.append(Band(float(lo), float(hi)))
            i = j + 1
        else:
            i += 1
    return bands


def _check_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not value > 0.0:
            raise ValueError(f"{name} must be positive, got {value}")


def eval_gamma(sf: SpectralFunction, omega):
    """Module-level alias for SpectralFunction.__call__."""
    return sf(omega)


def band_gaps(sf: SpectralFunction, omega_max: float) -> List[Tuple[float, float]]:
    """Module-level alias for SpectralFunction.gaps."""
    return sf.gaps(omega_max)
