import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlab import bead_exact as be
from gtlab.errors import CapacityError, DomainError


# ---------------------------------------------------------------------------
# configurations and tilt

def test_config_validation():
    be.BeadConfig(n=2, k=1, positions=((0.0,), (0.5,)))
    with pytest.raises(DomainError):
        be.BeadConfig(n=2, k=1, positions=((0.0,), (0.0,)))  # not distinct
    with pytest.raises(DomainError):
        be.BeadConfig(n=2, k=2, positions=((0.0, 0.4), (0.1, 0.2)))


def test_tilt_symmetric_pair():
    c = be.BeadConfig(n=2, k=1, positions=((0.0,), (0.5,)))
    assert be.tilt_of(c) == Fraction(1, 2)


@pytest.mark.parametrize("n,k,l", [(3, 2, 1), (3, 2, 2), (4, 2, 1), (4, 3, 3)])
def test_tilt_lattice_configuration(n, k, l):
    """Equally spaced beads shifted by l/(nk) per string have tilt l/n."""
    pos = tuple(
        tuple(sorted(((j + h * l / n) / k) % 1.0 for j in range(k)))
        for h in range(n))
    c = be.BeadConfig(n=n, k=k, positions=pos)
    assert be.tilt_of(c) == Fraction(l, n)


def test_same_string_gap_average():
    """Toric same-string gaps always average to 1/k."""
    c = be.BeadConfig(n=3, k=2, positions=((0.0, 0.5), (0.2, 0.7), (0.4, 0.9)))
    for row in c.positions:
        gaps = [(row[(j + 1) % c.k] - row[j]) % 1.0 for j in range(c.k)]
        assert sum(gaps) / c.k == pytest.approx(1.0 / c.k, abs=1e-12)


# ---------------------------------------------------------------------------
# exact volumes

def test_volume_211_is_one():
    ev = be.exact_volume(2, 1, 1)
    assert abs(ev.value - 1.0) < 1e-12


def test_volume_k0_is_binomial():
    assert float(be.exact_volume(5, 0, 2).value) == 10.0


def test_volume_boundary_tilts_vanish():
    assert float(be.exact_volume(4, 3, 0).value) == 0.0
    assert float(be.exact_volume(4, 3, 4).value) == 0.0


def test_volume_capacity_guard():
    with pytest.raises(CapacityError):
        be.exact_volume(40, 1, 20)


def test_volume_invalid_args():
    with pytest.raises(DomainError):
        be.exact_volume(3, 1, 4)


def test_volumes_nonnegative_with_certificate():
    for n in (2, 3, 4):
        for k in (0, 1, 2, 3):
            for l in range(n + 1):
                ev = be.exact_volume(n, k, l)
                assert ev.value >= -ev.error_bound


def test_volume_table_csv_roundtrip(tmp_path):
    table = be.BeadVolumeTable.build(3, 2)
    path = tmp_path / "table.csv"
    table.to_csv(path)
    back = be.BeadVolumeTable.from_csv(path)
    assert back.n == 3 and back.k_max == 2
    for key, ev in table.entries.items():
        assert abs(back.entries[key].value - ev.value) <= 1e-15 * (
            1 + abs(ev.value))


def test_mc_volume_matches_exact():
    ev = float(be.exact_volume(2, 2, 1).value)
    est, se = be.mc_volume(2, 2, 1, trials=100_000, rng_seed=7)
    assert abs(est - ev) <= 3.0 * se


# ---------------------------------------------------------------------------
# partition function

def test_partition_series_at_T_zero():
    n, lam = 3, 0.8
    s = be.partition_series(n, lam, 0.0)
    assert s.value == pytest.approx((1.0 + math.exp(-lam)) ** n, rel=1e-12)


def test_partition_product_at_T_zero():
    n, lam = 4, 0.3
    p = be.partition_product(n, lam, 0.0)
    assert float(p.total) == pytest.approx((1.0 + math.exp(-lam)) ** n,
                                           rel=1e-10)


def test_series_product_agreement():
    s = be.partition_series(2, 1.0, 0.5)
    p = be.partition_product(2, 1.0, 0.5)
    assert abs(s.value - float(p.total)) / float(p.total) < 1e-8


def test_partition_weights_sum_to_one():
    w = be.partition_product(3, 0.5, 0.7).weights()
    assert float(sum(w.values())) == pytest.approx(1.0, abs=1e-12)


def test_partition_series_rejects_negative_T():
    with pytest.raises(DomainError):
        be.partition_series(2, 0.0, -1.0)


# ---------------------------------------------------------------------------
# determinantal kernel and correlations

def test_kernel_direct_sum_oracle():
    """Two-term root sum at 50-digit precision."""
    n, beta, theta2, T, t, h = 2, 0.5, 0, 1.0, 0.25, 1
    with mp.workdps(50):
        total = mp.mpc(0)
        for z in (mp.mpc(1), mp.mpc(-1)):
            w = beta + T * z
            total += z ** (1 - h) * mp.e ** (-w * t) / (1 - mp.e ** (-w))
        expected = complex(T / n * total)
    got = be.kernel_H(n, beta, theta2, T, t, h)
    assert abs(got - expected) < 1e-12


@pytest.mark.parametrize("theta2", [0, 1])
def test_kernel_periodicity_in_h(theta2):
    n, beta, T, t = 3, 0.7 + 0.2j, 1.2, 0.4
    for h in (-1, 0, 2):
        a = be.kernel_H(n, beta, theta2, T, t, h)
        b = be.kernel_H(n, beta, theta2, T, t, h + n) * (-1) ** theta2
        assert abs(a - b) < 1e-10


def test_kernel_wrap_identity():
    """The kernel depends on t only through its fractional part, so shifting
    t by -1 leaves it unchanged."""
    beta, T, t = 0.9, 0.8, 0.3
    a = be.kernel_H(1, beta, 0, T, t - 1.0, 0)
    b = be.kernel_H(1, beta, 0, T, t, 0)
    assert abs(a - b) < 1e-10


def test_kernel_domain_errors():
    with pytest.raises(DomainError):
        be.kernel_H(2, 1.0, 0, 1.0, 1.5, 0)
    with pytest.raises(DomainError):
        be.kernel_H(2, -1.0, 0, 1.0, 0.2, 0)  # beta + T z = 0 at z = 1


def test_correlation_permutation_symmetric():
    rng = np.random.default_rng(1)
    pts = [(float(t), int(h)) for t, h in
           zip(rng.uniform(0, 1, 3), rng.integers(0, 3, 3))]
    base = be.correlation_rho(3, 0.5, 1.0, pts)
    perm = be.correlation_rho(3, 0.5, 1.0, [pts[2], pts[0], pts[1]])
    assert base == pytest.approx(perm, abs=1e-9)


def test_correlation_nonnegative_and_caps():
    rho = be.correlation_rho(3, 0.5, 1.0, [(0.2, 0)])
    assert rho >= -1e-9
    with pytest.raises(CapacityError):
        be.correlation_rho(3, 0.5, 1.0, [(i / 20, 0) for i in range(13)])
    with pytest.raises(DomainError):
        be.correlation_rho(3, 0.5, 1.0, [(0.2, 0), (0.2, 0)])


def test_coincident_points_kill_the_determinant():
    """rho_2 with nearly coincident points is near zero."""
    rho2 = be.correlation_rho(3, 0.5, 1.0, [(0.2, 0), (0.2 + 1e-7, 0)])
    assert abs(rho2) < 1e-4


# ---------------------------------------------------------------------------
# asymptotics

def test_asymptotic_gap_small_and_shrinking():
    g6 = abs(be.asymptotic_gap(6, 3))
    g10 = abs(be.asymptotic_gap(10, 5))
    assert g6 < 0.1
    assert g10 < g6


def test_asymptotic_gap_rejects_edge_tilt():
    with pytest.raises(DomainError):
        be.asymptotic_gap(6, 0)
