"""Arrowhead eigenvalue analysis of the supersystem excitation energies.

The system mode plus its reaction coordinates form a symmetric arrowhead

    M = [[alpha, arms], [arms, diag(shaft)]],
    alpha   = Omega^2 + sum_i 4 Omega lambda_i^2 / Omega_i,
    arms_i  = 2 lambda_i sqrt(Omega Omega_i),
    shaft_i = Omega_i^2,

whose eigenvalues are the squared excitation energies.  They are the roots of
the secular function s(sigma) = alpha - sigma - sum_i arms_i^2/(shaft_i -
sigma), pinned between consecutive shaft entries by Cauchy interlacing; the
largest one is the squared bound-state candidate and carries analytic lower
and upper bounds.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import exact as _exact
from . import quadrature as quad
from .rcmap import EdgeProximityWarning, RcDecomposition, decompose
from .spectral import SpectralFunction, SystemParams

__all__ = [
    "ArrowheadMatrix",
    "EigenvalueBounds",
    "ExcitationSpectrum",
    "SweepPoint",
    "bounds_largest",
    "bounds_largest_continuum",
    "build",
    "dense_eigen_oracle",
    "eigenvalues",
    "gap_census",
    "mode_mixing",
    "sweep",
]

_REL_BISECT = 1e-13   # relative bracket width before Newton polish
_EDGE_ATOL = 1e-9     # census margin around gap edges


@dataclass(frozen=True)
class ArrowheadMatrix:
    """Symmetric arrowhead: head scalar, shaft diagonal, coupling arms."""

    head: float
    shaft: np.ndarray
    arms: np.ndarray

    def __post_init__(self):
        shaft = np.atleast_1d(np.asarray(self.shaft, dtype=float))
        arms = np.atleast_1d(np.asarray(self.arms, dtype=float))
        if shaft.ndim != 1 or shaft.shape != arms.shape:
            raise ValueError("shaft and arms must be 1-d arrays of equal length")
        object.__setattr__(self, "shaft", shaft)
        object.__setattr__(self, "arms", arms)

    @property
    def size(self) -> int:
        return self.shaft.size + 1

    def trace(self) -> float:
        return self.head + float(self.shaft.sum())

    def dense(self) -> np.ndarray:
        n = self.size
        m = np.zeros((n, n))
        m[0, 0] = self.head
        m[0, 1:] = self.arms
        m[1:, 0] = self.arms
        idx = np.arange(1, n)
        m[idx, idx] = self.shaft
        return m


@dataclass(frozen=True)
class ExcitationSpectrum:
    """Sorted squared excitation energies and the orthogonal eigenbasis.

    Column q of `vectors` is the eigenvector of eps_sq[q]; row 0 is the
    original system mode, so vectors[0] holds the mixing weights.
    """

    eps_sq: np.ndarray
    vectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eps_sq.size

    @property
    def energies(self) -> np.ndarray:
        return np.sqrt(self.eps_sq)

    @property
    def system_weights(self) -> np.ndarray:
        return self.vectors[0]


@dataclass(frozen=True)
class EigenvalueBounds:
    loose_lower: float
    tight_lower: float
    upper: float


def build(params: SystemParams, decomposition: RcDecomposition) -> ArrowheadMatrix:
    """Arrowhead of squared excitation energies for one decomposition."""
    if decomposition.n < 1:
        raise ValueError("decomposition must contain at least one mode")
    om = params.omega
    omegas = decomposition.omegas
    lambdas = decomposition.lambdas
    head = om * om + float(np.sum(4.0 * om * lambdas**2 / omegas))
    arms = 2.0 * lambdas * np.sqrt(om * omegas)
    return ArrowheadMatrix(head=head, shaft=omegas**2, arms=arms)


# -- secular-equation eigensolver ---------------------------------------------

def _larger_quadratic_root(p: float, q: float, r: float) -> float:
    # larger root of (sigma - p)(sigma - q) = r with r >= 0
    return 0.5 * (p + q) + math.hypot(0.5 * (p - q), math.sqrt(r))


def _bisect_newton(s, s_prime, a: float, b: float) -> float:
    """Root of the strictly decreasing s on (a, b); signs at the ends known."""
    lo, hi = a, b
    while hi - lo > _REL_BISECT * max(abs(lo), abs(hi), 1e-30):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = s(mid)
        if fm == 0.0:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    for _ in range(2):
        slope = s_prime(sigma)
        if not math.isfinite(slope) or slope == 0.0:
            break
        candidate = sigma - s(sigma) / slope
        if not (a < candidate < b):
            break
        sigma = candidate
    return sigma


def _secular_roots(alpha: float, d: np.ndarray, c: np.ndarray) -> List[float]:
    """All roots of alpha - sigma - sum c^2/(d - sigma); d ascending, c > 0."""
    if d.size == 0:
        return [alpha]
    c_sq = c * c

    def s(sigma: float) -> float:
        return alpha - sigma - float(np.sum(c_sq / (d - sigma)))

    def s_prime(sigma: float) -> float:
        return -1.0 - float(np.sum(c_sq / (d - sigma) ** 2))

    # s is +inf right of each pole and -inf left of the next, so every
    # bracket has known signs; the outer ends come from a norm bound and the
    # Cassini-type upper bound
    lo = min(alpha, float(d[0])) - float(np.linalg.norm(c)) - 1.0
    hi = _larger_quadratic_root(alpha, float(d[-1]), float(np.sum(c_sq)))
    brackets = [(lo, float(d[0]))]
    brackets += [(float(d[k]), float(d[k + 1])) for k in range(d.size - 1)]
    brackets.append((float(d[-1]), hi))
    return [_bisect_newton(s, s_prime, a, b) for a, b in brackets]


def _null_completion(v: np.ndarray) -> np.ndarray:
    # orthonormal columns spanning the complement of v within its own space
    k = v.size
    if k == 1:
        return np.zeros((1, 0))
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(k)]))
    return q[:, 1:]


def eigenvalues(matrix: ArrowheadMatrix) -> ExcitationSpectrum:
    """Full spectrum by interlacing-guided secular root isolation.

    Zero arms deflate exactly; repeated shaft values are merged by rotating
    their arms onto one representative, whose complement yields exact
    eigenpairs pinned at the shaft value.
    """
    shaft, arms, head = matrix.shaft, matrix.arms, matrix.head
    n = shaft.size
    order = np.argsort(shaft, kind="stable")

    pairs: List[Tuple[float, np.ndarray]] = []
    pole_values: List[float] = []
    pole_weights: List[float] = []
    start = 0
    while start < n:
        stop = start
        while stop + 1 < n and shaft[order[stop + 1]] == shaft[order[start]]:
            stop += 1
        idx = order[start:start + (stop - start) + 1]
        value = float(shaft[idx[0]])
        group_arms = arms[idx]
        weight = float(np.linalg.norm(group_arms))
        if weight > 0.0:
            pole_values.append(value)
            pole_weights.append(weight)
            extra = _null_completion(group_arms)
        else:
            extra = np.eye(idx.size)
        for col in extra.T:
            vec = np.zeros(n + 1)
            vec[1 + idx] = col
            pairs.append((value, vec))
        start = stop + 1

    for sigma in _secular_roots(head, np.array(pole_values), np.array(pole_weights)):
        vec = np.zeros(n + 1)
        vec[0] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            comp = np.where(arms != 0.0, arms / (sigma - shaft), 0.0)
        if np.all(np.isfinite(comp)):
            vec[1:] = comp
        else:
            # root collapsed onto its pole at float precision: limit vector
            vec[0] = 0.0
            vec[1 + int(np.argmax(~np.isfinite(comp)))] = 1.0
        pairs.append((float(sigma), vec))

    pairs.sort(key=lambda item: item[0])
    eps_sq = np.array([value for value, _ in pairs])
    vectors = np.column_stack([vec for _, vec in pairs])
    vectors /= np.linalg.norm(vectors, axis=0)
    for q in range(vectors.shape[1]):
        pivot = vectors[0, q]
        if pivot == 0.0:
            pivot = vectors[np.argmax(np.abs(vectors[:, q])), q]
        if pivot < 0.0:
            vectors[:, q] = -vectors[:, q]
    return ExcitationSpectrum(eps_sq=eps_sq, vectors=vectors)


def dense_eigen_oracle(matrix: ArrowheadMatrix) -> np.ndarray:
    """Classical dense symmetric diagonalization; test cross-check only."""
    return np.linalg.eigvalsh(matrix.dense())


# -- analytic bounds on the largest eigenvalue --------------------------------

def bounds_largest(matrix: ArrowheadMatrix,
                   top: float | None = None) -> EigenvalueBounds:
    """Discrete-sum bounds: head Rayleigh quotient, 2x2 compression, Cassini.

    `top` replaces max(shaft) in the upper bound; any value >= max(shaft)
    keeps the bound valid.  Passing the squared band edge makes the bound
    converge to the continuum form instead of lagging by the last cell width.
    """
    alpha = matrix.head
    beta_sq = float(np.sum(matrix.arms**2))
    shaft_top = float(matrix.shaft.max())
    if top is None:
        top = shaft_top
    elif top < shaft_top:
        raise ValueError("top must not be below the largest shaft entry")
    if beta_sq == 0.0:
        peak = max(alpha, top)
        return EigenvalueBounds(alpha, peak, peak)
    shaft_entry = float(np.sum(matrix.arms**2 * matrix.shaft)) / beta_sq
    tight = _larger_quadratic_root(alpha, shaft_entry, beta_sq)
    upper = _larger_quadratic_root(alpha, top, beta_sq)
    return EigenvalueBounds(alpha, tight, upper)


def bounds_largest_continuum(sf: SpectralFunction,
                             params: SystemParams) -> EigenvalueBounds:
    """Continuum-integral form of the same bounds (fine-discretization limit)."""
    if not sf.gapped:
        raise ValueError("continuum bounds need a finite support upper edge")
    om = params.omega
    inverse = sum(quad.integrate(lambda w: sf(w) / w, b.lo, b.hi) for b in sf.bands)
    first = sum(quad.integrate(lambda w: w * sf(w), b.lo, b.hi) for b in sf.bands)
    third = sum(quad.integrate(lambda w: w**3 * sf(w), b.lo, b.hi) for b in sf.bands)
    alpha = om * om + (2.0 * om / math.pi) * inverse
    beta_sq = (2.0 * om / math.pi) * first
    shaft_entry = third / first
    top = sf.support_upper**2
    tight = _larger_quadratic_root(alpha, shaft_entry, beta_sq)
    upper = _larger_quadratic_root(alpha, top, beta_sq)
    return EigenvalueBounds(alpha, tight, upper)


# -- mode mixing, census, sweep ------------------------------------------------

def mode_mixing(spectrum: ExcitationSpectrum,
                params: SystemParams) -> Tuple[np.ndarray, np.ndarray]:
    """Bogoliubov pairs (u_q, v_q) of the system mode in the eigenbasis.

    a = sum_q Lambda_1q [u'_q c_q + v'_q c_q^dagger] with u-v structure set
    by the frequency mismatch; sum(u^2 - v^2) = 1 restates row normalization.
    """
    ratio = np.sqrt(params.omega / spectrum.energies)
    lam = spectrum.system_weights
    u = 0.5 * lam * (ratio + 1.0 / ratio)
    v = 0.5 * lam * (ratio - 1.0 / ratio)
    return u, v


def gap_census(spectrum: ExcitationSpectrum,
               gaps: Sequence[Tuple[float, float]],
               edge_atol: float = _EDGE_ATOL) -> List[int]:
    """Number of excitation energies strictly inside each gap.

    Energies within edge_atol of a gap edge count as in-band and are flagged,
    since interlacing does not decide the edge case at finite N.
    """
    energies = spectrum.energies
    counts = []
    for lo, hi in gaps:
        inside = 0
        for e in energies:
            if lo + edge_atol < e < hi - edge_atol:
                inside += 1
            elif abs(e - lo) <= edge_atol or abs(e - hi) <= edge_atol:
                warnings.warn(
                    f"excitation energy {e} sits on a gap edge of ({lo}, {hi})",
                    EdgeProximityWarning, stacklevel=2)
        counts.append(inside)
    return counts


@dataclass(frozen=True)
class SweepPoint:
    gamma: float
    eps_sq: Tuple[float, ...]
    bounds: EigenvalueBounds
    omega_b_sq: float          # exact-oracle value; nan when no bound state
    bs_exists: bool
    gap_counts: Tuple[int, ...]


def sweep(params: SystemParams, sf: SpectralFunction,
          gammas: Sequence[float], n: int,
          counts: Sequence[int] | None = None,
          workers: int | None = None) -> List[SweepPoint]:
    """Coupling sweep: spectra, bounds, exact oracle, and gap census per point."""
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("coupling grid must be nonempty")
    if any(g <= 0.0 for g in gammas):
        raise ValueError("coupling grid values must be positive")
    gamma_max = max(gammas)

    base = decompose(sf.with_amplitude(1.0), n, counts)
    cache = _exact.GapRootCache(sf, params, gamma_max) if sf.gapped else None
    edge_sq = sf.support_upper**2 if sf.gapped else None
    if sf.gapped:
        top_bounds = bounds_largest(build(params, base.rescaled(gamma_max)), top=edge_sq)
        omega_max = max(2.0 * sf.support_upper, 1.5 * math.sqrt(top_bounds.upper))
        gaps = sf.gaps(omega_max)
    else:
        gaps = []

    def point(gamma: float) -> SweepPoint:
        dec = base.rescaled(gamma)
        matrix = build(params, dec)
        spectrum = eigenvalues(matrix)
        bnd = bounds_largest(matrix, top=edge_sq)
        roots = cache.roots(gamma) if cache is not None else []
        omega_b_sq = roots[-1] ** 2 if roots else math.nan
        census = gap_census(spectrum, gaps)
        return SweepPoint(gamma=gamma, eps_sq=tuple(spectrum.eps_sq),
                          bounds=bnd, omega_b_sq=omega_b_sq,
                          bs_exists=bool(roots), gap_counts=tuple(census))

    if workers is None:
        workers = int(os.environ.get("RC_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, gammas))
    return [point(g) for g in gammas]
