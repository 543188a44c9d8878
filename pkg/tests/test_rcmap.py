"""Parallel reaction-coordinate mapping: partitions, parameters, residuals."""
import math

import numpy as np
import pytest

from rcbound import quadrature as quad
from rcbound import rcmap
from rcbound.spectral import Band, SpectralFunction

# equal-weight boundary of the half-filled band: int_0^b w Gamma = pi/32
SPLIT_TWO = 0.7071067811865475
# cell-1 parameters for N = 2, gamma = 1
OMEGA_1_N2 = 0.3908374
LAMBDA_1_N2 = 0.1999456


def test_single_cell_closed_forms():
    for gamma in (1.0, 2.7):
        dec = rcmap.decompose(SpectralFunction.rubin(gamma=gamma), 1)
        assert dec.n == 1
        mode = dec.modes[0]
        assert mode.omega_i == pytest.approx(0.5, rel=1e-10)
        assert mode.lambda_i == pytest.approx(math.sqrt(gamma) / 4.0, rel=1e-10)
        assert mode.interval == Band(0.0, 1.0)


def test_rc_parameters_scales_with_cutoff():
    gamma, wc = 1.3, 2.0
    dec = rcmap.decompose(SpectralFunction.rubin(gamma=gamma, omega_c=wc), 1)
    assert dec.modes[0].omega_i == pytest.approx(wc / 2.0, rel=1e-10)
    assert dec.modes[0].lambda_i == pytest.approx(math.sqrt(gamma * wc) / 4.0, rel=1e-10)


def test_equal_weight_split_two_cells():
    sf = SpectralFunction.rubin(gamma=1.0)
    cells = rcmap.partition_equal_weight(sf, 2)
    assert len(cells) == 2
    assert cells[0].hi == pytest.approx(SPLIT_TWO, rel=1e-9)
    assert cells[0].hi == cells[1].lo
    om1, lam1 = rcmap.rc_parameters(sf, cells[0])
    assert om1 == pytest.approx(OMEGA_1_N2, rel=1e-6)
    assert lam1 == pytest.approx(LAMBDA_1_N2, rel=1e-6)


def test_equal_weights_and_coupling_invariant():
    gamma, n = 1.0, 5
    sf = SpectralFunction.rubin(gamma=gamma)
    dec = rcmap.decompose(sf, n)
    weights = [quad.integrate(lambda w: w * sf(w), m.interval.lo, m.interval.hi)
               for m in dec.modes]
    for w in weights[1:]:
        assert w == pytest.approx(weights[0], rel=1e-9)
    # equal weights make lambda_i^2 Omega_i = gamma wc^2 / (32 n) for every cell
    for m in dec.modes:
        assert m.lambda_i**2 * m.omega_i == pytest.approx(gamma / (32.0 * n), rel=1e-9)


def test_two_cell_invariant_value():
    dec = rcmap.decompose(SpectralFunction.rubin(gamma=1.0), 2)
    assert dec.modes[0].lambda_i**2 * dec.modes[0].omega_i == pytest.approx(
        1.0 / 64.0, rel=1e-9)


def test_omegas_increase_and_sit_inside_cells():
    dec = rcmap.decompose(SpectralFunction.rubin(gamma=1.0), 10)
    omegas = dec.omegas
    assert np.all(np.diff(omegas) > 0.0)
    for m in dec.modes:
        assert m.interval.lo < m.omega_i < m.interval.hi


def test_multi_band_counts():
    sf = SpectralFunction.shifted_sum(gamma=1.0, offsets=(1.5,))
    cells = rcmap.partition_equal_weight(sf, 1, counts=[2, 3])
    assert len(cells) == 5
    assert cells[1].hi == pytest.approx(1.0)
    assert cells[2].lo == pytest.approx(1.5)
    # equal weights within each band separately
    w = [quad.integrate(lambda x: x * sf(x), c.lo, c.hi) for c in cells]
    assert w[0] == pytest.approx(w[1], rel=1e-9)
    assert w[2] == pytest.approx(w[3], rel=1e-9)
    assert w[3] == pytest.approx(w[4], rel=1e-9)
    # default: n cells in every band
    assert len(rcmap.partition_equal_weight(sf, 2)) == 4


def test_partition_validation():
    sf = SpectralFunction.shifted_sum(gamma=1.0, offsets=(1.5,))
    with pytest.raises(ValueError):
        rcmap.partition_equal_weight(sf, 0)
    with pytest.raises(ValueError):
        rcmap.partition_equal_weight(sf, 2, counts=[2])
    with pytest.raises(ValueError):
        rcmap.partition_equal_weight(sf, 2, counts=[2, 0])
    with pytest.raises(ValueError):
        rcmap.partition_equal_weight(SpectralFunction.drude_gapless(gamma=1.0), 2)


def test_rescaled_decomposition():
    dec = rcmap.decompose(SpectralFunction.rubin(gamma=1.0), 4)
    dec4 = dec.rescaled(4.0)
    assert dec4.source.gamma == 4.0
    np.testing.assert_allclose(dec4.omegas, dec.omegas, rtol=0)
    np.testing.assert_allclose(dec4.lambdas, 2.0 * dec.lambdas, rtol=1e-15)
    # agrees with a fresh decomposition at the target amplitude
    fresh = rcmap.decompose(SpectralFunction.rubin(gamma=4.0), 4)
    np.testing.assert_allclose(dec4.omegas, fresh.omegas, rtol=1e-9)
    np.testing.assert_allclose(dec4.lambdas, fresh.lambdas, rtol=1e-9)


def test_residual_single_cell_closed_form():
    # amplitude drops out of the full-band residual: Gamma_1 = w sqrt(1 - w^2)
    for gamma in (1.0, 7.0):
        sf = SpectralFunction.rubin(gamma=gamma)
        dec = rcmap.decompose(sf, 1)
        for w in np.linspace(0.05, 0.95, 50):
            want = w * math.sqrt(1.0 - w * w)
            got = rcmap.residual_gamma(sf, dec, 1, float(w))
            assert got == pytest.approx(want, abs=1e-6)


def test_residual_zero_outside_interval():
    sf = SpectralFunction.rubin(gamma=1.0)
    dec = rcmap.decompose(sf, 2)
    assert rcmap.residual_gamma(sf, dec, 1, 0.9) == 0.0   # in cell 2
    assert rcmap.residual_gamma(sf, dec, 2, 0.3) == 0.0   # in cell 1
    assert rcmap.residual_gamma(sf, dec, 2, 1.4) == 0.0   # above the band


def test_residual_edge_zone_flagged():
    sf = SpectralFunction.rubin(gamma=1.0)
    dec = rcmap.decompose(sf, 1)
    for w in (5e-7, 1.0 - 5e-7):
        with pytest.warns(rcmap.EdgeProximityWarning):
            assert rcmap.residual_gamma(sf, dec, 1, w) == 0.0


def test_residual_respects_width_ceiling():
    sf = SpectralFunction.rubin(gamma=1.0)
    dec = rcmap.decompose(sf, 8)
    rng = np.random.default_rng(3)
    for m in dec.modes:
        for _ in range(4):
            w = rng.uniform(m.interval.lo + 0.01 * m.interval.width,
                            m.interval.hi - 0.01 * m.interval.width)
            r = rcmap.residual_gamma(sf, dec, m.index, float(w))
            assert 0.0 <= r <= 1.2 * rcmap.residual_bound(m.interval.width)


def test_residual_bound_value():
    assert rcmap.residual_bound(1.0) == pytest.approx(2.0 / math.pi, rel=1e-15)
    assert rcmap.residual_bound(0.25) == pytest.approx(0.5 / math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        rcmap.residual_bound(0.0)


def test_residual_index_validation():
    sf = SpectralFunction.rubin(gamma=1.0)
    dec = rcmap.decompose(sf, 2)
    with pytest.raises(ValueError):
        rcmap.residual_gamma(sf, dec, 0, 0.5)
    with pytest.raises(IndexError):
        rcmap.residual_gamma(sf, dec, 5, 0.5)


def test_two_band_decomposition_modes():
    sf = SpectralFunction.shifted_sum(gamma=1.0, offsets=(1.5,))
    dec = rcmap.decompose(sf, 1)  # one cell per band
    assert dec.n == 2
    assert dec.modes[0].interval == Band(0.0, 1.0)
    assert dec.modes[1].interval == Band(1.5, 2.5)
    # upper-band mode frequency lies inside the upper band
    assert 1.5 < dec.modes[1].omega_i < 2.5
    # residual of the lower cell vanishes in the upper band
    assert rcmap.residual_gamma(sf, dec, 1, 2.0) == 0.0
