"""Adaptive quadrature, principal values, and the single-band closed forms."""
import math

import numpy as np
import pytest
import scipy.integrate

from rcbound.quadrature import (
    AccuracyError,
    PvIntegral,
    cauchy_pv,
    cauchy_transform,
    integrate,
    principal_value,
    rubin_band_integral,
    rubin_cauchy_transform,
    rubin_first_moment,
    rubin_inverse_moment,
    rubin_ip,
)
from rcbound.spectral import SpectralFunction


def midpoint_riemann(f, a, b, n=2_000_000):
    # independent oracle: composite midpoint rule
    t = np.linspace(a, b, n, endpoint=False) + 0.5 * (b - a) / n
    return float(np.sum([f(ti) for ti in t]) * (b - a) / n)


def test_closed_form_anchors():
    assert rubin_band_integral(1.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert rubin_inverse_moment(1.0, 1.0) == pytest.approx(math.pi / 4.0, rel=1e-15)
    assert rubin_first_moment(1.0, 1.0) == pytest.approx(math.pi / 16.0, rel=1e-15)
    # scalings: linear in gamma; band integral ~ wc, first moment ~ wc^2
    assert rubin_band_integral(3.0, 2.0) == pytest.approx(2.0, rel=1e-15)
    assert rubin_inverse_moment(2.0, 5.0) == pytest.approx(math.pi / 2.0, rel=1e-15)
    assert rubin_first_moment(2.0, 3.0) == pytest.approx(math.pi * 9.0 / 8.0, rel=1e-15)


def test_integrate_band_moments():
    sf = SpectralFunction.rubin(gamma=1.0)
    assert integrate(sf, 0.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-10)
    assert integrate(lambda w: sf(w) / w, 1e-300, 1.0) == pytest.approx(
        math.pi / 4.0, rel=1e-9)
    assert integrate(lambda w: w * sf(w), 0.0, 1.0) == pytest.approx(
        math.pi / 16.0, rel=1e-10)


def test_integrate_against_midpoint_oracle():
    f = lambda t: math.exp(-t) * math.cos(3.0 * t)
    assert integrate(f, 0.0, 2.0) == pytest.approx(
        midpoint_riemann(f, 0.0, 2.0), rel=1e-9)
    sf = SpectralFunction.rubin(gamma=1.7)
    # sqrt band edge: midpoint converges ~ n^(-3/2), still ample at 2e6 points
    assert integrate(sf, 0.0, 1.0) == pytest.approx(
        midpoint_riemann(sf, 0.0, 1.0), rel=1e-8)


def test_integrate_interval_validation():
    with pytest.raises(ValueError):
        integrate(math.sin, 1.0, 1.0)
    with pytest.raises(ValueError):
        integrate(math.sin, 2.0, 1.0)


def test_integrate_nonintegrable_raises():
    with pytest.raises(AccuracyError) as info:
        integrate(lambda t: 1.0 / t, 0.0, 1.0)
    assert math.isfinite(info.value.estimate)  # best estimate still attached


def test_integrate_narrow_feature_with_hint():
    width = 1e-3
    f = lambda t: math.exp(-(((t - 0.37) / width) ** 2))
    v = integrate(f, 0.0, 1.0, points=[0.37])
    assert v == pytest.approx(width * math.sqrt(math.pi), rel=1e-12)


def test_integrate_inverse_sqrt_edges():
    # 1/sqrt singularities at both endpoints, handled by the edge substitution
    f = lambda t: 1.0 / math.sqrt(t * (1.0 - t))
    assert integrate(f, 0.0, 1.0) == pytest.approx(math.pi, rel=1e-8)


def test_cauchy_pv_log_closed_forms():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a, span = rng.uniform(0.0, 1.0), rng.uniform(0.5, 2.0)
        b = a + span
        pole = rng.uniform(a + 0.1 * span, b - 0.1 * span)
        # f = 1: P int 1/(t-p) = log((b-p)/(p-a))
        assert cauchy_pv(lambda t: 1.0, a, b, pole) == pytest.approx(
            math.log((b - pole) / (pole - a)), rel=1e-10, abs=1e-12)
        # f = t: P int t/(t-p) = (b-a) + p log((b-p)/(p-a))
        expect = span + pole * math.log((b - pole) / (pole - a))
        assert cauchy_pv(lambda t: t, a, b, pole) == pytest.approx(
            expect, rel=1e-10, abs=1e-12)


def test_cauchy_pv_excision_oracle():
    # independent oracle: symmetric excision with eps = 1e-6
    rng = np.random.default_rng(20260814)
    eps = 1e-6
    for _ in range(20):
        c = rng.uniform(-1.0, 1.0, size=4)
        f = lambda t: math.exp(-t) * (c[0] + c[1] * t + c[2] * t * t) + c[3] * math.sin(2.0 * t)
        a, b = 0.0, 2.0
        pole = rng.uniform(0.2, 1.8)
        left, _ = scipy.integrate.quad(lambda t: f(t) / (t - pole), a, pole - eps, limit=200)
        right, _ = scipy.integrate.quad(lambda t: f(t) / (t - pole), pole + eps, b, limit=200)
        oracle = left + right
        got = cauchy_pv(f, a, b, pole)
        assert abs(got - oracle) <= 5e-5 * max(1.0, abs(oracle))


def test_cauchy_pv_pole_placement():
    f = lambda t: 1.0
    with pytest.raises(ValueError):
        cauchy_pv(f, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        cauchy_pv(f, 0.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        cauchy_pv(f, 0.0, 1.0, 1e-14)  # inside but pinned to the endpoint


def test_principal_value_multi_interval():
    sf = SpectralFunction.shifted_sum(gamma=1.0)
    numerator = lambda t: sf(t) * math.exp(-0.1 * t)
    intervals = ((0.0, 1.0), (1.5, 2.5))
    pole = 0.6
    spec = PvIntegral(numerator=numerator, pole=pole, intervals=intervals)
    # pole interval by subtraction, the far interval ordinarily
    part1 = cauchy_pv(numerator, 0.0, 1.0, pole)
    part2, _ = scipy.integrate.quad(lambda t: numerator(t) / (t - pole), 1.5, 2.5)
    assert principal_value(spec) == pytest.approx(part1 + part2, rel=1e-9)
    # pole in the gap: both intervals ordinary
    spec_gap = PvIntegral(numerator=numerator, pole=1.2, intervals=intervals)
    g1, _ = scipy.integrate.quad(lambda t: numerator(t) / (t - 1.2), 0.0, 1.0,
                                 points=[1.0], limit=200)
    g2, _ = scipy.integrate.quad(lambda t: numerator(t) / (t - 1.2), 1.5, 2.5)
    assert principal_value(spec_gap) == pytest.approx(g1 + g2, rel=1e-7)


def test_principal_value_pole_at_edge_rejected():
    spec = PvIntegral(numerator=lambda t: 1.0, pole=1.5,
                      intervals=((0.0, 1.0), (1.5, 2.5)))
    with pytest.raises(ValueError):
        principal_value(spec)


def test_cauchy_transform_matches_rubin_closed_form():
    sf = SpectralFunction.rubin(gamma=1.3)
    for z in (1.3 + 0.0j, 0.5 + 0.5j, 2.0j, -0.4 + 0.9j, 3.7 + 0.0j):
        want = rubin_cauchy_transform(1.3, 1.0, z)
        got = cauchy_transform(sf, z)
        assert abs(got - want) <= 1e-8 * max(1.0, abs(want))


def test_cauchy_transform_on_support_rejected():
    sf = SpectralFunction.rubin(gamma=1.0)
    with pytest.raises(ValueError):
        cauchy_transform(sf, 0.5 + 0.0j)


def test_cauchy_transform_gapless_closed_form():
    # for the gapless kind, W(iy) = gamma wc / (wc + y) exactly
    gamma, wc = 2.0, 1.0
    sf = SpectralFunction.drude_gapless(gamma=gamma, omega_c=wc)
    for y in (0.3, 0.7, 2.5):
        got = cauchy_transform(sf, 1j * y)
        assert got.real == pytest.approx(gamma * wc / (wc + y), rel=1e-8)
        assert abs(got.imag) < 1e-10


def test_rubin_ip_values():
    assert rubin_ip(1.0, 1.0, 0.5) == pytest.approx(math.pi / 8.0, rel=1e-14)
    # continuous across the band edge (sqrt cusp above: error ~ sqrt(2 delta))
    assert rubin_ip(1.0, 1.0, 1.0 - 1e-9) == pytest.approx(
        rubin_ip(1.0, 1.0, 1.0 + 1e-9), rel=1e-4)
    # far above the band the transform tends to the inverse moment
    assert rubin_ip(1.0, 1.0, 50.0) == pytest.approx(math.pi / 4.0, rel=1e-3)
    with pytest.raises(ValueError):
        rubin_ip(1.0, 1.0, 0.0)


def test_rubin_ip_against_pv_route():
    # same quantity assembled from the generic principal-value machinery
    gamma, wc = 1.4, 1.0
    for omega in (0.3, 0.8):
        numerator = lambda u: -gamma * math.sqrt(max(0.0, 1.0 - u * u)) * omega**2 / (u + omega)
        spec = PvIntegral(numerator=numerator, pole=omega, intervals=((0.0, wc),))
        assert principal_value(spec) == pytest.approx(
            rubin_ip(gamma, wc, omega), rel=1e-8)
    for omega in (1.3, 2.0):  # above the band the integral is ordinary
        val = integrate(
            lambda u: gamma * u * math.sqrt(max(0.0, 1.0 - u * u)) * omega**2
            / (u * (omega * omega - u * u)), 0.0, wc)
        assert val == pytest.approx(rubin_ip(gamma, wc, omega), rel=1e-8)
