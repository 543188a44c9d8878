"""Adaptive quadrature shared by every band integral in the package.

Plain integrals are delegated to QUADPACK.  Principal values use singularity
subtraction,

    P int_a^b f(t)/(t - x) dt
        = f(x) log((b - x)/(x - a)) + int_a^b (f(t) - f(x))/(t - x) dt,

so the remaining integrand is bounded at the pole.  Closed forms for the
single-band shape are kept here as fast paths and independent cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import integrate as _sciint

from .spectral import SpectralFunction

__all__ = [
    "AccuracyError",
    "PvIntegral",
    "cauchy_pv",
    "cauchy_transform",
    "integrate",
    "principal_value",
    "rubin_band_integral",
    "rubin_cauchy_transform",
    "rubin_first_moment",
    "rubin_inverse_moment",
    "rubin_ip",
]

DEFAULT_RTOL = 1e-9
_SUBDIV_LIMIT = 200  # QUADPACK subinterval budget; a depth-60 bisection chain fits


class AccuracyError(RuntimeError):
    """Quadrature failed to meet its tolerance; carries the best estimate."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def integrate(f: Callable[[float], float], a: float, b: float,
              rtol: float = DEFAULT_RTOL, atol: float = 1e-13,
              points: Sequence[float] | None = None) -> float:
    """Adaptive integral of f over [a, b].

    points are interior split hints (peaks, resonances).  Raises
    AccuracyError, with the best estimate attached, if the subdivision
    budget is exhausted; endpoint sqrt-singularities are retried with the
    substitution t = edge +/- u^2 before giving up.
    """
    if not b > a:
        raise ValueError("integration interval must satisfy a < b")
    pts = None
    limit = _SUBDIV_LIMIT
    if points is not None:
        pts = sorted(set(p for p in points if a < p < b))
        pts = pts or None
        if pts:
            # the initial subdivision already consumes one interval per point
            limit += 2 * len(pts)
    out = _sciint.quad(f, a, b, epsabs=atol, epsrel=rtol,
                       limit=limit, points=pts, full_output=True)
    value, abserr = out[0], out[1]
    if len(out) == 3 and _tolerance_met(value, abserr, rtol, atol):
        return value
    retried = _integrate_sqrt_edges(f, a, b, rtol, atol)
    if retried is not None:
        return retried
    raise AccuracyError(
        f"integral on [{a}, {b}] did not converge (err~{abserr:.2e})", value)


def _tolerance_met(value: float, abserr: float, rtol: float, atol: float) -> bool:
    return abserr <= max(atol, rtol * abs(value)) * 50.0


def _integrate_sqrt_edges(f, a, b, rtol, atol):
    # substitute t = a + u^2 and t = b - u^2 on the two halves; this removes
    # inverse-sqrt endpoint singularities exactly
    mid = 0.5 * (a + b)
    width = math.sqrt(mid - a)
    lo = _sciint.quad(lambda u: 2.0 * u * f(a + u * u), 0.0, width,
                      epsabs=0.5 * atol, epsrel=rtol, limit=_SUBDIV_LIMIT,
                      full_output=True)
    hi = _sciint.quad(lambda u: 2.0 * u * f(b - u * u), 0.0, math.sqrt(b - mid),
                      epsabs=0.5 * atol, epsrel=rtol, limit=_SUBDIV_LIMIT,
                      full_output=True)
    if len(lo) == 3 and len(hi) == 3:
        value = lo[0] + hi[0]
        if _tolerance_met(value, lo[1] + hi[1], rtol, atol):
            return value
    return None


def cauchy_pv(f: Callable[[float], float], a: float, b: float, pole: float,
              rtol: float = DEFAULT_RTOL,
              points: Sequence[float] | None = None) -> float:
    """P int_a^b f(t)/(t - pole) dt by singularity subtraction.

    f must be continuous at the pole, which must lie strictly inside (a, b);
    a pole within 1e-12 of an endpoint is a domain error the caller has to
    resolve (the subtracted logarithm diverges there).  points are extra
    split hints for the subtracted integral (kinks of f).
    """
    width = b - a
    if not (a < pole < b):
        raise ValueError("pole must lie strictly inside the interval")
    if min(pole - a, b - pole) < 1e-12 * width:
        raise ValueError("pole too close to an interval endpoint")
    fx = f(pole)
    step = min(1e-7 * width, 0.5 * (pole - a), 0.5 * (b - pole))
    dfx = (f(pole + step) - f(pole - step)) / (2.0 * step)

    def subtracted(t: float) -> float:
        d = t - pole
        if abs(d) < 1e-13 * width:
            return dfx
        return (f(t) - fx) / d

    log_part = fx * math.log((b - pole) / (pole - a))
    return log_part + integrate(subtracted, a, b, rtol=rtol,
                                points=[pole, *(points or ())])


@dataclass(frozen=True)
class PvIntegral:
    """Multi-interval principal value of numerator(t)/(t - pole).

    numerator already absorbs any regular kernel factors and is continuous
    at the pole.  points are split hints for kinks of the numerator.
    """

    numerator: Callable[[float], float]
    pole: float
    intervals: Tuple[Tuple[float, float], ...]
    points: Tuple[float, ...] = ()


def principal_value(spec: PvIntegral, rtol: float = DEFAULT_RTOL) -> float:
    total = 0.0
    pole = spec.pole
    for (a, b) in spec.intervals:
        if a < pole < b:
            total += cauchy_pv(spec.numerator, a, b, pole, rtol=rtol,
                               points=spec.points)
        elif abs(pole - a) < 1e-12 * (b - a) or abs(pole - b) < 1e-12 * (b - a):
            raise ValueError("pole coincides with an interval endpoint")
        else:
            total += integrate(lambda t: spec.numerator(t) / (t - pole), a, b,
                               rtol=rtol, points=spec.points)
    return total


# -- Cauchy transform --------------------------------------------------------

def cauchy_transform(sf: SpectralFunction, z: complex,
                     rtol: float = DEFAULT_RTOL) -> complex:
    """W(z) = (2/pi) int_0^inf w Gamma(w) / (w^2 - z^2) dw for z off the support.

    Equals (1/pi) int_-inf^inf Gamma(w)/(w - z) dw under the odd continuation.
    Gamma(w) = lim Im W(w + i eps) recovers the spectral function.
    """
    z = complex(z)
    x = abs(z.real)
    if z.imag == 0.0:
        band = sf.band_containing(x)
        if band is not None and band.contains(x, strict=True) and sf(x) != 0.0:
            raise ValueError("cauchy transform evaluated on the band support")

    def kernel_re(w: float) -> float:
        return ((2.0 / math.pi) * w * sf(w) / (w * w - z * z)).real

    def kernel_im(w: float) -> float:
        return ((2.0 / math.pi) * w * sf(w) / (w * w - z * z)).imag

    total = 0.0 + 0.0j
    for band in sf.bands:
        lo, hi = band.lo, band.hi
        if math.isfinite(hi):
            pts = list(sf.interior_points(lo, hi))
            if lo < x < hi:
                pts.append(x)
            re = integrate(kernel_re, lo, hi, rtol=rtol, points=pts)
            im = integrate(kernel_im, lo, hi, rtol=rtol, points=pts)
            total += complex(re, im)
            continue
        # semi-infinite band: finite head, then w = 1/u maps the algebraic
        # tail onto a bounded interval (tails fall off only as 1/w^2)
        split = 8.0 * max(sf.omega_c, abs(z), 1.0)
        pts = [x] if lo < x < split else None
        re = integrate(kernel_re, lo, split, rtol=rtol, points=pts)
        im = integrate(kernel_im, lo, split, rtol=rtol, points=pts)
        tail_re = integrate(lambda u: kernel_re(1.0 / u) / (u * u),
                            0.0, 1.0 / split, rtol=rtol)
        tail_im = integrate(lambda u: kernel_im(1.0 / u) / (u * u),
                            0.0, 1.0 / split, rtol=rtol)
        total += complex(re + tail_re, im + tail_im)
    return total


# -- closed forms for the single-band shape ----------------------------------

def rubin_band_integral(gamma: float, omega_c: float) -> float:
    """int_0^wc Gamma(w) dw = Gamma wc / 3."""
    return gamma * omega_c / 3.0


def rubin_inverse_moment(gamma: float, omega_c: float) -> float:
    """int_0^wc Gamma(w)/w dw = pi Gamma / 4."""
    return math.pi * gamma / 4.0


def rubin_first_moment(gamma: float, omega_c: float) -> float:
    """int_0^wc w Gamma(w) dw = pi Gamma wc^2 / 16."""
    return math.pi * gamma * omega_c**2 / 16.0


def rubin_ip(gamma: float, omega_c: float, omega: float) -> float:
    """P int_0^wc (Gamma(u)/u) w^2/(w^2 - u^2) du for the single-band shape.

    Inside the band the principal value is pi Gamma w^2 / (2 wc^2); above the
    band the integral is ordinary and continues the same expression.
    """
    if omega <= 0.0:
        raise ValueError("frequency must be positive")
    if omega <= omega_c:
        return 0.5 * math.pi * gamma * omega**2 / omega_c**2
    root = math.sqrt(omega * omega - omega_c * omega_c)
    return 0.5 * math.pi * gamma * omega * (omega - root) / omega_c**2


def rubin_cauchy_transform(gamma: float, omega_c: float, z: complex) -> complex:
    """Closed form of cauchy_transform for the single-band shape."""
    z = complex(z)
    if z == 0.0:
        return 0.5 * gamma + 0.0j
    w2 = (z / omega_c) ** 2
    return 0.5 * gamma + gamma * w2 * (np.sqrt(1.0 - 1.0 / w2) - 1.0)
