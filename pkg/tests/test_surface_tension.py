import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlab import surface_tension as stn
from gtlab.errors import DomainError, InfeasibleFieldError
from gtlab.variational import TriangleField

pos = st.floats(0.05, 20.0)


def test_sigma_symmetric_point():
    assert abs(stn.sigma((0.5, 0.5)) - (1.0 - math.log(math.pi))) < 1e-14


def test_sigma_symmetry_example():
    assert stn.sigma((1.0, 2.0)) == pytest.approx(stn.sigma((2.0, 1.0)), abs=1e-14)


def test_sigma_homogeneity_example():
    lam = 3.0
    assert stn.sigma((lam * 0.7, lam * 1.3)) == pytest.approx(
        math.log(lam) + stn.sigma((0.7, 1.3)), abs=1e-12)


def test_sigma_domain_error():
    with pytest.raises(DomainError):
        stn.sigma((0.0, 1.0))
    with pytest.raises(DomainError):
        stn.sigma_grad((-1.0, 1.0))


def test_sigma_gt_sentinel_and_negation():
    assert stn.sigma_gt((1.0, 0.0)) == math.inf
    assert stn.sigma_gt((0.0, 0.0)) == math.inf
    assert stn.sigma_gt((0.5, 0.5)) + stn.sigma((0.5, 0.5)) == 0.0


def test_grad_at_symmetric_point():
    g = stn.sigma_grad((0.5, 0.5))
    assert g.u1 == pytest.approx(1.0, abs=1e-12)
    assert g.u2 == pytest.approx(1.0, abs=1e-12)


def test_grad_matches_finite_differences():
    u = (1.0, 2.0)
    h = 1e-5
    g = stn.sigma_grad(u)
    fd1 = (stn.sigma((u[0] + h, u[1])) - stn.sigma((u[0] - h, u[1]))) / (2 * h)
    fd2 = (stn.sigma((u[0], u[1] + h)) - stn.sigma((u[0], u[1] - h))) / (2 * h)
    assert abs(g.u1 - fd1) < 1e-6 * abs(fd1)
    assert abs(g.u2 - fd2) < 1e-6 * max(abs(fd2), 1.0)


@settings(max_examples=30, deadline=None)
@given(pos, pos)
def test_euler_relation(u1, u2):
    """Differentiating sigma(lam u) = log lam + sigma(u) at lam = 1 gives
    u . grad sigma = 1."""
    g = stn.sigma_grad((u1, u2))
    assert u1 * g.u1 + u2 * g.u2 == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos, st.floats(0.01, 0.99))
def test_sigma_gt_convexity(a1, a2, b1, b2, lam):
    mid = (lam * a1 + (1 - lam) * b1, lam * a2 + (1 - lam) * b2)
    lhs = stn.sigma_gt(mid)
    rhs = lam * stn.sigma_gt((a1, a2)) + (1 - lam) * stn.sigma_gt((b1, b2))
    assert lhs <= rhs + 1e-12


@settings(max_examples=50, deadline=None)
@given(pos, pos)
def test_sigma_symmetry(u1, u2):
    assert stn.sigma((u1, u2)) == pytest.approx(stn.sigma((u2, u1)), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(pos, pos, st.floats(0.1, 10.0))
def test_sigma_homogeneity(u1, u2, lam):
    assert stn.sigma((lam * u1, lam * u2)) == pytest.approx(
        math.log(lam) + stn.sigma((u1, u2)), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(pos, pos)
def test_sandwich_bound(u1, u2):
    lo = min(u1, u2)
    s = stn.sigma((u1, u2))
    assert stn.SANDWICH_C1 + math.log(lo) <= s + 1e-12
    assert s <= stn.SANDWICH_C2 + math.log(lo) + 1e-12


@settings(max_examples=50, deadline=None)
@given(pos, pos, st.floats(-0.49, 0.49), st.floats(-0.49, 0.49))
def test_lipschitz_bound(u1, u2, r1, r2):
    lo = min(u1, u2)
    h1, h2 = r1 * lo, r2 * lo
    diff = abs(stn.sigma((u1 + h1, u2 + h2)) - stn.sigma((u1, u2)))
    assert diff <= 10.0 * (abs(h1) + abs(h2)) / lo + 1e-12


# ---------------------------------------------------------------------------
# triangle energy integral

def _affine_field(m, a, b, c=0.0):
    g = np.arange(m + 1) / m
    return TriangleField(m=m, values=a * g[:, None] + b * g[None, :] + c)


def test_energy_integral_affine_exact():
    a, b = 1.3, 0.4
    f = _affine_field(12, a, b)
    assert stn.energy_integral(f) == pytest.approx(
        0.5 * stn.sigma_gt((a, b)), abs=1e-12)


def test_energy_integral_symmetric_affine():
    f = _affine_field(10, 0.5, 0.5)
    assert stn.energy_integral(f) == pytest.approx(
        (math.log(math.pi) - 1.0) / 2, abs=1e-12)


def test_energy_integral_infeasible_names_cell():
    g = np.arange(9) / 8.0
    vals = 1.0 * g[:, None] + 0.0 * g[None, :]  # flat in t
    with pytest.raises(InfeasibleFieldError) as exc:
        stn.energy_integral(TriangleField(m=8, values=vals))
    assert exc.value.cell is not None
