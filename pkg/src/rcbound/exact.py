"""Exact long-term behaviour of the damped oscillator.

Everything here follows from the Laplace-domain response on the imaginary
axis, f(+/- i w) = Omega + (2/pi) I_P(w) +/- i Gamma(w).  A bound state is an
undamped root w_b of w^2 = Omega * Re f(i w) inside a band gap; it keeps the
first moments oscillating forever, with residue amplitude
g0 = 1/(1 + Omega fbar / (2 w_b)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from . import quadrature as quad
from .spectral import SpectralFunction, SystemParams, bose_occupation

__all__ = [
    "BoundStateReport",
    "LongTermMoments",
    "bar_f",
    "bound_state_exists",
    "bound_state_frequency",
    "bound_state_report",
    "commutator_value",
    "critical_coupling",
    "f_imaginary_axis",
    "long_term_moments",
    "residue_amplitude",
]

_GAP_BRACKETS = 200       # initial sign-change grid per gap
_ROOT_ATOL = 1e-12        # bisection width on the root equation
_EDGE_PAD = 1e-12         # relative pad keeping PV poles off band edges


def _ip(sf: SpectralFunction, omega: float, rtol: float = quad.DEFAULT_RTOL) -> float:
    """I_P(w) = P int (Gamma(u)/u) w^2/(w^2 - u^2) du over the support."""
    if omega <= 0.0:
        raise ValueError("frequency must be positive")
    if sf.kind == "rubin":
        return quad.rubin_ip(sf.gamma, sf.omega_c, omega)
    if sf.kind == "drude_gapless":
        # partial fractions leave only the arctan moment
        return 0.5 * math.pi * sf.gamma * omega**2 / (omega**2 + sf.omega_c**2)

    def numerator(u: float) -> float:
        return -sf(u) * omega**2 / (u * (u + omega))

    total = 0.0
    for band in sf.bands:
        lo, hi = band.lo, band.hi
        if not math.isfinite(hi):
            hi = _tail_cutoff(sf, omega)
        knots = sf.interior_points(lo, hi)
        pad = _EDGE_PAD * (hi - lo)
        if lo + pad < omega < hi - pad:
            total += quad.cauchy_pv(numerator, lo, hi, omega, rtol=rtol,
                                    points=knots)
        elif abs(omega - lo) <= pad or abs(omega - hi) <= pad:
            # pole pushed to a band edge where Gamma vanishes: ordinary
            # improper integral
            total += quad.integrate(lambda u: numerator(u) / (u - omega),
                                    lo, hi, rtol=rtol, points=knots)
        else:
            total += quad.integrate(lambda u: numerator(u) / (u - omega),
                                    lo, hi, rtol=rtol, points=[omega, *knots])
    return total


def _tail_cutoff(sf: SpectralFunction, omega: float) -> float:
    upper = 4.0 * max(sf.omega_c, omega, 1.0)
    while sf(upper) / upper > 1e-14 * sf.gamma:
        upper *= 2.0
    return upper


def f_imaginary_axis(sf: SpectralFunction, params: SystemParams,
                     omega: float) -> complex:
    """Response function on the imaginary axis, f(i w) for w > 0."""
    return complex(params.omega + (2.0 / math.pi) * _ip(sf, omega), sf(omega))


def _root_function(sf: SpectralFunction, params: SystemParams) -> Callable[[float], float]:
    """R(w) = w^2 - Omega * Re f(i w); bound states are gap roots of R."""
    om = params.omega

    def rfun(w: float) -> float:
        return w * w - om * (om + (2.0 / math.pi) * _ip(sf, w))

    return rfun


def _gap_roots(sf: SpectralFunction, params: SystemParams) -> List[float]:
    if not sf.gapped:
        return []
    rfun = _root_function(sf, params)
    roots: List[float] = []
    top = sf.support_upper
    for gap_lo, gap_hi in _search_gaps(sf, rfun, top):
        grid = np.linspace(gap_lo, gap_hi, _GAP_BRACKETS + 1)
        values = [rfun(w) for w in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            if fa == 0.0:
                roots.append(float(a))
            elif fa * fb < 0.0:
                roots.append(_bisect(rfun, float(a), float(b), fa))
    return sorted(roots)


def _search_gaps(sf: SpectralFunction, rfun, top: float):
    """Finite gaps plus the semi-infinite top gap truncated where R > 0."""
    gaps = sf.gaps(2.0 * top)
    out = []
    for lo, hi in gaps:
        if hi < 2.0 * top:
            out.append((lo + _EDGE_PAD * top, hi - _EDGE_PAD * top))
    hi = 2.0 * top
    while rfun(hi) < 0.0:
        hi *= 2.0
    out.append((top + _EDGE_PAD * top, hi))
    return out


def _bisect(fun, a: float, b: float, fa: float) -> float:
    while b - a > _ROOT_ATOL:
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def bound_state_exists(sf: SpectralFunction, params: SystemParams) -> bool:
    """Whether an undamped oscillation survives in the long-term solution."""
    if not sf.gapped:
        return False
    if sf.kind == "rubin":
        wc = sf.omega_c
        return 1.0 - (params.omega / wc) ** 2 <= sf.gamma * params.omega / wc**2
    return bool(_gap_roots(sf, params))


def critical_coupling(sf: SpectralFunction, params: SystemParams) -> float:
    """Smallest amplitude at which the top-gap bound state appears.

    Returns 0 when Omega already sits in a gap (bound regardless of
    coupling) and inf for gapless spectral functions (never bound).
    """
    if not sf.gapped:
        return math.inf
    om = params.omega
    if sf(om) == 0.0:
        return 0.0
    if sf.kind == "rubin":
        return (sf.omega_c**2 - om**2) / om
    edge = sf.support_upper
    unit = sf.with_amplitude(1.0)
    inv_moment = sum(
        quad.integrate(lambda w: unit(w) / w, b.lo, b.hi,
                       points=unit.interior_points(b.lo, b.hi))
        for b in unit.bands)
    edge_moment = sum(
        quad.integrate(lambda w: w * unit(w) / (edge * edge - w * w), b.lo, b.hi,
                       points=unit.interior_points(b.lo, b.hi))
        for b in unit.bands)
    return (edge * edge - om * om) / ((2.0 * om / math.pi) * (inv_moment + edge_moment))


def _rubin_bound_frequency(sf: SpectralFunction, params: SystemParams) -> float | None:
    alpha = sf.gamma * params.omega / sf.omega_c**2
    beta = params.omega / sf.omega_c
    denom = 4.0 * alpha - 2.0
    if abs(denom) < 1e-9:  # degenerate closed form, fall back to bisection
        return None
    disc = (alpha + 2.0 * beta**2) ** 2 - 4.0 * beta**2
    num = alpha**2 + 2.0 * alpha * beta**2 - 2.0 * beta**2 + alpha * math.sqrt(disc)
    return sf.omega_c * math.sqrt(num / denom)


def bound_state_frequency(sf: SpectralFunction, params: SystemParams,
                          verify_tol: float = 1e-8) -> float:
    """Frequency of the gap root; raises if no bound state exists."""
    if not bound_state_exists(sf, params):
        raise ValueError("no bound state for these parameters")
    omega_b: float | None = None
    if sf.kind == "rubin":
        omega_b = _rubin_bound_frequency(sf, params)
    if omega_b is None:
        roots = _gap_roots(sf, params)
        if not roots:
            raise ValueError("no bound state for these parameters")
        omega_b = roots[-1]
    residual = omega_b**2 - params.omega * f_imaginary_axis(sf, params, omega_b).real
    if abs(residual) > verify_tol * max(1.0, omega_b**2):
        raise quad.AccuracyError(
            f"bound-state root fails verification (residual {residual:.2e})", omega_b)
    return omega_b


def bar_f(sf: SpectralFunction, params: SystemParams, omega_b: float) -> float:
    """Residue weight (4 w_b / pi) int w Gamma(w) / (w^2 - w_b^2)^2 dw."""
    if sf.kind == "rubin":
        wc = sf.omega_c
        if omega_b < wc:
            raise ValueError("bound-state frequency must lie above the band")
        root = math.sqrt(max(0.0, 1.0 - (wc / omega_b) ** 2))
        if root == 0.0:  # frequency at the band edge: residue vanishes
            return math.inf
        return sf.gamma * omega_b * (1.0 - root) ** 2 / (wc**2 * root)
    total = 0.0
    for band in sf.bands:
        total += quad.integrate(
            lambda w: w * sf(w) / (w * w - omega_b * omega_b) ** 2,
            band.lo, band.hi, points=sf.interior_points(band.lo, band.hi))
    return 4.0 * omega_b / math.pi * total


def residue_amplitude(params: SystemParams, omega_b: float, fbar: float) -> float:
    """Oscillation amplitude prefactor g0 = 1/(1 + Omega fbar / (2 w_b))."""
    return 1.0 / (1.0 + params.omega * fbar / (2.0 * omega_b))


@dataclass(frozen=True)
class BoundStateReport:
    exists: bool
    omega_b: float | None
    fbar: float | None
    residue: float
    critical_gamma: float
    all_roots: Tuple[float, ...] = ()
    multiple_roots: bool = False


def bound_state_report(sf: SpectralFunction, params: SystemParams) -> BoundStateReport:
    critical = critical_coupling(sf, params)
    if sf.kind == "rubin":
        if not bound_state_exists(sf, params):
            return BoundStateReport(False, None, None, 0.0, critical)
        omega_b = bound_state_frequency(sf, params)
        roots: Tuple[float, ...] = (omega_b,)
    else:
        roots = tuple(_gap_roots(sf, params))
        if not roots:
            return BoundStateReport(False, None, None, 0.0, critical)
        omega_b = roots[-1]
    fbar = bar_f(sf, params, omega_b)
    return BoundStateReport(True, omega_b, fbar,
                            residue_amplitude(params, omega_b, fbar),
                            critical, roots, len(roots) > 1)


class GapRootCache:
    """Amplitude-swept root finder for one spectral shape.

    I_P scales linearly with the amplitude, so a single table of the
    unit-amplitude transform serves every sweep point; candidate brackets
    come from the table and are polished against the exact root function.
    """

    def __init__(self, sf: SpectralFunction, params: SystemParams,
                 gamma_max: float, nodes: int = 257):
        if not sf.gapped:
            raise ValueError("root cache requires a gapped spectral function")
        self.params = params
        self.unit = sf.with_amplitude(1.0)
        top = self.unit.support_upper
        om = params.omega
        # upper end of the top gap: past it the root function is positive
        # for every amplitude up to gamma_max
        hi = 2.0 * top
        while hi * hi - om * om - gamma_max * om * (2.0 / math.pi) * _ip(self.unit, hi) < 0.0:
            hi *= 2.0
        self.grids: List[np.ndarray] = []
        self.tables: List[np.ndarray] = []
        for lo, g_hi in self.unit.gaps(hi):
            pad_lo = 1e-9 * max(lo, top)
            pad_hi = 1e-9 * (g_hi - lo) if g_hi < top else 0.0
            self._append(np.linspace(lo + pad_lo, g_hi - pad_hi, nodes))

    def _append(self, grid: np.ndarray) -> None:
        self.grids.append(grid)
        self.tables.append(np.array([_ip(self.unit, w) for w in grid]))

    def roots(self, gamma: float) -> List[float]:
        """All gap roots at the given amplitude, smallest first."""
        om = self.params.omega
        sf = self.unit.with_amplitude(gamma)
        rfun = _root_function(sf, self.params)
        out: List[float] = []
        for grid, table in zip(self.grids, self.tables):
            exact_r = grid * grid - om * om - gamma * om * (2.0 / math.pi) * table
            signs = np.sign(exact_r)
            for k in np.nonzero(signs[:-1] * signs[1:] < 0.0)[0]:
                out.append(_bisect(rfun, float(grid[k]), float(grid[k + 1]),
                                   float(exact_r[k])))
        return sorted(out)


# -- long-term moments --------------------------------------------------------

@dataclass(frozen=True)
class LongTermMoments:
    """Long-term first and second moments at a given time."""

    time: float
    bound_state: bool
    x_mean: float
    p_mean: float
    x2: float
    p2: float
    x2_stationary: float
    p2_stationary: float
    x2_bs_mean: float
    p2_bs_mean: float
    x2_oscillatory_amplitude: float
    p2_oscillatory_amplitude: float
    occupation: float


def _thermal_weight(sf: SpectralFunction, params: SystemParams, w: float) -> float:
    weight = sf(w)
    if params.temperature > 0.0 and w > 0.0:
        weight *= 1.0 + 2.0 * bose_occupation(w, params.temperature)
    return weight


def _abs_response_sq(sf: SpectralFunction, params: SystemParams, w: float) -> float:
    om = params.omega
    real = w * w - om * (om + (2.0 / math.pi) * _ip(sf, w))
    return real * real + (om * sf(w)) ** 2


def _resonance_points(sf: SpectralFunction, params: SystemParams,
                      lo: float, hi: float) -> List[float]:
    """In-band zeros of the real part; split points for delta-like peaks."""
    rfun = _root_function(sf, params)
    pad = 1e-9 * (hi - lo)
    grid = np.linspace(lo + pad, hi - pad, 257)
    values = [rfun(w) for w in grid]
    points = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa * fb < 0.0:
            points.append(_bisect(rfun, float(a), float(b), fa))
    if lo < params.omega < hi:
        points.append(params.omega)
    return points


def _band_integral(sf: SpectralFunction, params: SystemParams,
                   weight: Callable[[float], float],
                   stationary: bool, rtol: float = 1e-10) -> float:
    """sum over bands of int dw/(2 pi) Gamma(w) [1 + 2n] weight(w) kernel."""
    total = 0.0
    for band in sf.bands:
        lo, hi = band.lo, band.hi
        if not math.isfinite(hi):
            hi = _tail_cutoff(sf, max(params.omega, sf.omega_c))

        points = list(sf.interior_points(lo, hi))
        if stationary:
            def integrand(w: float) -> float:
                return _thermal_weight(sf, params, w) * weight(w) / \
                    _abs_response_sq(sf, params, w)
            points += _resonance_points(sf, params, lo, hi)
        else:
            def integrand(w: float) -> float:
                return _thermal_weight(sf, params, w) * weight(w)
        total += quad.integrate(integrand, lo, hi, rtol=rtol, points=points)
    return total / (2.0 * math.pi)


def long_term_moments(sf: SpectralFunction, params: SystemParams, t: float = 0.0,
                      x0: float = 1.0, p0: float = 0.0,
                      x2_0: float | None = None, p2_0: float | None = None,
                      xp_sym_0: float | None = None) -> LongTermMoments:
    """Moments of the long-term state for initial means (x0, p0).

    Default second moments are those of a displaced vacuum: unit variances
    and symmetrized covariance x0*p0.
    """
    om = params.omega
    if x2_0 is None:
        x2_0 = x0 * x0 + 1.0
    if p2_0 is None:
        p2_0 = p0 * p0 + 1.0
    if xp_sym_0 is None:
        xp_sym_0 = x0 * p0

    sx = _band_integral(sf, params, lambda w: 4.0 * om * om, stationary=True)
    sp = _band_integral(sf, params, lambda w: 4.0 * w * w, stationary=True)

    report = bound_state_report(sf, params)
    if report.exists:
        wb = report.omega_b
        g0 = report.residue
        g = g0 * math.cos(wb * t)
        h = g0 * math.sin(wb * t)
        denom = lambda w: (wb * wb - w * w) ** 2
        c1 = _band_integral(sf, params, lambda w: 4.0 * om * om / denom(w), False)
        c2 = _band_integral(sf, params, lambda w: 4.0 * om * om * (w / wb) ** 2 / denom(w), False)
        d1 = _band_integral(sf, params, lambda w: 4.0 * w * w / denom(w), False)
        d2 = _band_integral(sf, params, lambda w: 4.0 * wb * wb / denom(w), False)

        x_mean = g * x0 + (om / wb) * h * p0
        p_mean = g * p0 - (wb / om) * h * x0
        xs = x2_0 + c1
        ys = (om / wb) ** 2 * p2_0 + c2
        zs = (om / wb) * xp_sym_0
        x2 = sx + g * g * xs + h * h * ys + 2.0 * g * h * zs
        xp = p2_0 + d1
        yp = (wb / om) ** 2 * x2_0 + d2
        zp = (wb / om) * xp_sym_0
        p2 = sp + g * g * xp + h * h * yp - 2.0 * g * h * zp
        x2_bs_mean = 0.5 * g0 * g0 * (xs + ys)
        p2_bs_mean = 0.5 * g0 * g0 * (xp + yp)
        x2_amp = 0.5 * g0 * g0 * math.hypot(xs - ys, 2.0 * zs)
        p2_amp = 0.5 * g0 * g0 * math.hypot(xp - yp, 2.0 * zp)
    else:
        x_mean = p_mean = 0.0
        x2, p2 = sx, sp
        x2_bs_mean = p2_bs_mean = 0.0
        x2_amp = p2_amp = 0.0

    occupation = 0.25 * (x2 + p2) - 0.5
    return LongTermMoments(
        time=t, bound_state=report.exists,
        x_mean=x_mean, p_mean=p_mean, x2=x2, p2=p2,
        x2_stationary=sx, p2_stationary=sp,
        x2_bs_mean=x2_bs_mean, p2_bs_mean=p2_bs_mean,
        x2_oscillatory_amplitude=x2_amp, p2_oscillatory_amplitude=p2_amp,
        occupation=occupation)


def commutator_value(sf: SpectralFunction, params: SystemParams) -> float:
    """[x, p]/i of the long-term state; equals 2 for the exact solution."""
    om = params.omega
    band = 0.0
    for b in sf.bands:
        hi = b.hi if math.isfinite(b.hi) else _tail_cutoff(sf, om)
        band += quad.integrate(
            lambda w: 4.0 * om * w * sf(w) / _abs_response_sq(sf, params, w),
            b.lo, hi, rtol=1e-10,
            points=list(sf.interior_points(b.lo, hi))
            + _resonance_points(sf, params, b.lo, hi))
    total = 2.0 * band / (2.0 * math.pi)
    if bound_state_exists(sf, params):
        wb = bound_state_frequency(sf, params)
        g0 = residue_amplitude(params, wb, bar_f(sf, params, wb))
        bs_band = sum(
            quad.integrate(
                lambda w: 4.0 * om * w * sf(w) / (wb * wb - w * w) ** 2,
                b.lo, b.hi, points=sf.interior_points(b.lo, b.hi))
            for b in sf.bands) / (2.0 * math.pi)
        total += 2.0 * g0 * g0 * (1.0 + bs_band)
    return total
