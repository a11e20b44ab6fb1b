import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlab import measure_core as mc
from gtlab.errors import DomainError, PoleProximityError, SingularDensityError


# ---------------------------------------------------------------------------
# GridMeasure validation

def test_gridmeasure_rejects_negative_density():
    with pytest.raises(DomainError):
        mc.GridMeasure(0.0, 1.0, np.array([1.0, -0.5, 1.0]), 1.0)


def test_gridmeasure_rejects_bad_support():
    with pytest.raises(DomainError):
        mc.GridMeasure(1.0, 0.0, np.ones(3), 1.0)


def test_gridmeasure_rejects_mass_mismatch():
    with pytest.raises(DomainError):
        mc.GridMeasure(0.0, 1.0, np.ones(3), 0.5)


def test_json_roundtrip():
    m = mc.semicircle()
    m2 = mc.GridMeasure.from_json(m.to_json())
    assert m2.support_lo == m.support_lo
    assert m2.mass == m.mass
    np.testing.assert_allclose(m2.density, m.density)


# ---------------------------------------------------------------------------
# quantiles

def test_quantile_of_uniform_is_identity():
    q = mc.quantile_of(mc.uniform(0.0, 1.0))
    r = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(q(r), r, atol=1e-6)


def test_quantile_of_uniform_scales():
    c = 3.5
    q = mc.quantile_of(mc.uniform(0.0, c))
    r = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(q(r), c * r, atol=1e-5)


def test_semicircle_median_is_zero():
    q = mc.quantile_of(mc.semicircle())
    assert abs(q(0.5)) < 1e-6


def test_quantile_of_zero_mass_rejected():
    m = mc.uniform(0.0, 1.0)
    object.__setattr__(m, "mass", 0.0)
    with pytest.raises(DomainError):
        mc.quantile_of(m)


def test_density_from_identity_quantile():
    q = mc.QuantileCurve(1.0, np.linspace(0.0, 1.0, 501))
    m = mc.density_from_quantile(q)
    assert abs(m.support_lo) < 1e-12 and abs(m.support_hi - 1.0) < 1e-12
    np.testing.assert_allclose(m.density, 1.0, atol=1e-6)


def test_density_from_stretched_quantile():
    q = mc.QuantileCurve(1.0, np.linspace(0.0, 2.0, 501))
    m = mc.density_from_quantile(q)
    np.testing.assert_allclose(m.density, 0.5, atol=1e-6)


def test_density_quantile_roundtrip_semicircle():
    sc = mc.semicircle()
    back = mc.density_from_quantile(mc.quantile_of(sc))
    assert mc.l1_distance(sc, back) < 1e-2


def test_flat_quantile_is_singular():
    vals = np.concatenate([np.linspace(0, 1, 100), np.full(10, 1.0),
                           np.linspace(1, 2, 100)])
    with pytest.raises(SingularDensityError):
        mc.density_from_quantile(mc.QuantileCurve(1.0, vals))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.2, 3.0), min_size=8, max_size=40))
def test_quantile_density_mutual_inverse(samples):
    """quantile_of and density_from_quantile invert each other on strictly
    positive densities."""
    dens = np.asarray(samples)
    m = mc._renormalized(0.0, 1.0, dens, 1.0)
    q = mc.quantile_of(m, grid_size=800)
    back = mc.density_from_quantile(q, grid_size=800)
    q2 = mc.quantile_of(back, grid_size=800)
    r = np.linspace(0.02, 0.98, 31)
    assert np.max(np.abs(q(r) - q2(r))) < 2.0 / len(samples)


# ---------------------------------------------------------------------------
# Cauchy transform

def test_cauchy_semicircle_closed_form():
    # G(z) = (z - sqrt(z^2 - 4)) / 2 at z = 2i gives i (1 - sqrt 2)
    g = mc.cauchy_transform(mc.semicircle(), 2j)
    assert abs(g - 1j * (1.0 - math.sqrt(2.0))) < 1e-4


def test_cauchy_far_field_moment():
    for m in (mc.semicircle(), mc.arcsine(), mc.uniform(0.0, 1.0)):
        z = 1e6 + 0j
        assert abs(z * mc.cauchy_transform(m, z) - 1.0) < 1e-5


def test_cauchy_uniform_real_point():
    g = mc.cauchy_transform(mc.uniform(0.0, 1.0), 2.0 + 0j)
    assert abs(g - math.log(2.0)) < 1e-6


def test_cauchy_upper_half_plane_sign():
    z = np.linspace(-3, 3, 11) + 0.5j
    g = mc.cauchy_transform(mc.semicircle(), z)
    assert np.all(g.imag < 0)


def test_cauchy_on_support_raises():
    with pytest.raises(PoleProximityError):
        mc.cauchy_transform(mc.semicircle(), 0.5 + 0j)


def test_stieltjes_inversion():
    """-(1/pi) Im G(x + i eps) approximates the density in the bulk."""
    m = mc.semicircle()
    rng = np.random.default_rng(3)
    x = rng.uniform(-1.5, 1.5, 20)
    g = mc.cauchy_transform(m, x + 1e-3j)
    approx = -g.imag / math.pi
    exact = np.interp(x, m.grid, m.density)
    assert np.max(np.abs(approx - exact)) < 1e-2


def test_cauchy_deriv_matches_differences():
    m = mc.semicircle()
    z = 0.3 + 0.7j
    h = 1e-6
    fd = (mc.cauchy_transform(m, z + h) - mc.cauchy_transform(m, z - h)) / (2 * h)
    assert abs(mc.cauchy_transform_deriv(m, z) - fd) < 1e-6


# ---------------------------------------------------------------------------
# log potential

def test_tail_mass_limits():
    m = mc.semicircle()
    _, v_hi = mc.log_potential_parts(m, 10.0)
    _, v_lo = mc.log_potential_parts(m, -10.0)
    assert abs(v_hi) < 1e-12
    assert abs(v_lo + 1.0) < 1e-12


def test_arcsine_equilibrium_potential():
    u0, _ = mc.log_potential_parts(mc.arcsine(), 0.0)
    assert abs(u0 + math.log(2.0) / math.pi) < 1e-3


def test_potential_derivative_is_cauchy_real_part():
    """Central differences of U recover (1/pi) Re G on the boundary."""
    m = mc.semicircle()
    x = np.array([-1.2, -0.4, 0.3, 1.1])
    h = 1e-4
    up, _ = mc.log_potential_parts(m, x + h)
    um, _ = mc.log_potential_parts(m, x - h)
    fd = (up - um) / (2 * h)
    g = mc.cauchy_transform(m, x + 1e-6j)
    assert np.max(np.abs(fd - g.real / math.pi)) < 1e-3


# ---------------------------------------------------------------------------
# free entropy

def test_free_entropy_arcsine():
    assert abs(mc.free_entropy(mc.arcsine()) - (0.75 - math.log(2.0) / 2)) < 1e-3


def test_free_entropy_semicircle():
    assert abs(mc.free_entropy(mc.semicircle()) - 0.625) < 1e-3


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_free_entropy_uniform(c):
    assert abs(mc.free_entropy(mc.uniform(0.0, c)) - math.log(c) / 2) < 1e-3


def test_free_entropy_density_vs_quantile_forms():
    for m in (mc.semicircle(), mc.uniform(0.0, 1.0), mc.arcsine()):
        a = mc.free_entropy(m)
        b = mc.free_entropy_from_quantile(mc.quantile_of(m))
        assert abs(a - b) < 1e-3


def test_free_entropy_requires_probability():
    half = mc.GridMeasure(0.0, 1.0, np.full(11, 0.5), 0.5)
    with pytest.raises(DomainError):
        mc.free_entropy(half)


def test_builtin_lookup():
    assert mc.builtin("semicircle").mass == 1.0
    with pytest.raises(DomainError):
        mc.builtin("cantor")
