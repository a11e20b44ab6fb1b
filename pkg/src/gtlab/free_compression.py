"""Free-compression flow of a probability measure and its quantile surface.

For a compactly supported probability measure mu, the free compression
[mu]_tau (tau in (0,1]) is the measure whose R-transform is R_mu(tau s); the
sub-probability measure mu_tau = tau [mu]_tau has mass tau and Cauchy
transform G(tau, z) solving

    tau / G + R_mu(G) = z.

Substituting G = G_mu(w) eliminates the R-transform: w solves the
characteristic equation  w + (tau - 1)/G_mu(w) = z,  which this module solves
by vectorized Newton iteration with continuation in tau (the inviscid
Burgers picture of the same flow).  The quantile surface lambda(r, tau) of
mu_tau solves the Euler-Lagrange equation of the Lagrangian
sigma_0(l_r, l_t) = log l_r + log sin(pi l_t / l_r), which the module checks
discretely, along with the evolution identities for the log-potential U and
the tail mass V.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import measure_core as mc
from .errors import ConvergenceError, DomainError, FlowError
from .measure_core import GridMeasure, QuantileCurve

__all__ = [
    "RTransformHandle",
    "CompressionFlow",
    "r_transform_handle",
    "r_transform_eval",
    "compress_measure",
    "build_flow",
    "burgers_residual",
    "el_residual",
    "potential_evolution_check",
    "export_flow",
]

DEFAULT_EPS0 = 1e-3


# ---------------------------------------------------------------------------
# R-transform

@dataclass(frozen=True)
class RTransformHandle:
    """Access to R_mu near the origin: closed form for the semicircle,
    otherwise numeric inversion of 1/G(z) + R(G(z)) = z."""

    kind: str                     # "closed_form_semicircle" | "numeric"
    measure: GridMeasure | None
    variance: float               # closed-form parameter
    mean: float
    radius: float                 # validity radius for |s|


def r_transform_handle(m: GridMeasure | None = None, *,
                       semicircle_variance: float | None = None,
                       eps0: float = DEFAULT_EPS0) -> RTransformHandle:
    """Numeric handle for a grid measure, or the semicircle closed form."""
    if semicircle_variance is not None:
        return RTransformHandle(
            kind="closed_form_semicircle", measure=None,
            variance=semicircle_variance, mean=0.0, radius=math.inf)
    if m is None:
        raise DomainError("need a measure or a closed-form parameter")
    x = m.grid
    mean = float(np.trapezoid(x * m.density, x) / m.mass)
    g = mc.cauchy_transform(m, x + 1j * eps0)
    radius = 0.8 * float(np.max(np.abs(g)))
    return RTransformHandle(kind="numeric", measure=m, variance=float("nan"),
                            mean=mean, radius=radius)


def r_transform_eval(h: RTransformHandle, s: complex) -> complex:
    """R(s); for numeric handles, by Newton solution of G_mu(z) = s."""
    if h.kind == "closed_form_semicircle":
        return h.variance * s
    s = complex(s)
    if s == 0:
        return complex(h.mean)
    if abs(s) > h.radius:
        raise DomainError(f"|s| = {abs(s):.3g} outside validity radius "
                          f"{h.radius:.3g}")
    m = h.measure
    z = 1.0 / s + h.mean
    if z.imag == 0.0:
        z += 1e-9j if s.imag <= 0 else -1e-9j
    for _ in range(100):
        g = mc.cauchy_transform(m, z)
        if abs(g - s) < 1e-12 * abs(s):
            return z - 1.0 / s
        z = z - (g - s) / mc.cauchy_transform_deriv(m, z)
    residual = abs(mc.cauchy_transform(m, z) - s)
    raise ConvergenceError(
        f"R-transform Newton stalled at residual {residual:.3g}",
        residual=residual)


# ---------------------------------------------------------------------------
# the compression flow

def _solve_characteristics(m: GridMeasure, z: np.ndarray, tau: float,
                           w0: np.ndarray | None = None,
                           newton_tol: float = 1e-11,
                           max_iter: int = 60) -> tuple:
    """Solve w + (tau-1)/G_mu(w) = z for each z, vectorized Newton.

    Returns (w, g, failed_mask) with g = G_mu(w).  Seeds from w0 (the
    solution at the previous tau) or from z itself, which is exact at
    tau = 1.  The physical branch keeps Im G_mu(w) < 0 on the upper contour.
    Converged nodes retire from the Newton iteration, so the vectorized
    transform is only evaluated on the stragglers.
    """
    w = z.copy() if w0 is None else w0.copy()
    gout = np.empty(w.shape, dtype=complex)
    c = tau - 1.0
    # outside the compressed support the true w hugs the real axis, so the
    # positivity floor must sit far below Im z or it stalls the iteration
    floor = 1e-9 * float(np.min(z.imag))

    def newton_sweep(w, seed_idx):
        idx = seed_idx
        failed = np.zeros(w.shape, dtype=bool)
        for it in range(max_iter):
            wa = w.flat[idx]
            g = mc.cauchy_transform(m, wa)
            f = wa + c / g - z.flat[idx]
            done = np.abs(f) < newton_tol
            gout.flat[idx] = g
            if it == max_iter - 1:
                failed.flat[idx[~done]] = True
                break
            idx = idx[~done]
            if idx.size == 0:
                break
            wa, g, f = wa[~done], g[~done], f[~done]
            gp = mc.cauchy_transform_deriv(m, wa)
            wa = wa - f / (1.0 - c * gp / g**2)
            wa = np.where(wa.imag < floor, wa.real + 1j * floor, wa)
            w.flat[idx] = wa
        return failed

    failed = newton_sweep(w, np.arange(w.size))
    if np.any(failed | (gout.imag >= 0)):
        # stragglers sit near the fold where the characteristic map has a
        # caustic; reseed them from the large-w asymptotic w ~ z / tau,
        # which lands on the physical (outer) branch
        retry = np.flatnonzero((failed | (gout.imag >= 0)).ravel())
        w.flat[retry] = z.flat[retry] / tau
        still = newton_sweep(w, retry)
        failed = np.zeros(w.shape, dtype=bool)
        failed.flat[retry] = still.flat[retry]
    failed |= gout.imag >= 0
    return w, gout, failed


def _resampled(m: GridMeasure, cells: int) -> GridMeasure:
    """The same measure on a coarser uniform grid (linear interpolation)."""
    if m.density.size - 1 <= cells:
        return m
    x = np.linspace(m.support_lo, m.support_hi, cells + 1)
    d = np.interp(x, m.grid, m.density)
    total = np.trapezoid(d, x)
    return GridMeasure(m.support_lo, m.support_hi, d * (m.mass / total), m.mass)


def compress_measure(m: GridMeasure, tau: float, *, eps0: float = DEFAULT_EPS0,
                     grid_size: int = mc.DEFAULT_GRID,
                     tau_substeps: int = 6,
                     solver_cells: int = 400) -> GridMeasure:
    """The free compression [mu]_tau as a probability measure.

    Solves the characteristic equation on the contour x + i eps0 with
    continuation in tau, recovers the density by Stieltjes inversion, and
    renormalizes to mass one.  tau = 1 is the identity.  The base measure is
    resampled to ``solver_cells`` for the Newton solves; the transform is
    exact per cell, so the coarsening error is quadratic and far below the
    eps0 smoothing bias.
    """
    if not (0.0 < tau <= 1.0):
        raise DomainError(f"tau = {tau} outside (0, 1]")
    if abs(m.mass - 1.0) > 1e-9:
        raise DomainError("compress_measure expects a probability measure")
    if tau == 1.0:
        return m
    solver = _resampled(m, solver_cells)
    x = np.linspace(m.support_lo, m.support_hi, grid_size + 1)
    z = x + 1j * eps0
    w = None
    for t in np.linspace(1.0, tau, tau_substeps + 1)[1:]:
        w, g, failed = _solve_characteristics(solver, z, float(t), w0=w)
    if np.mean(failed) > 0.01:
        raise FlowError(
            f"Newton failed on {100 * np.mean(failed):.1f}% of nodes at "
            f"tau = {tau}", residual=float(np.mean(failed)))
    density = np.clip(-g.imag / math.pi, 0.0, None)
    total = np.trapezoid(density, x)
    if total <= 0:
        raise FlowError(f"vanishing inverted density at tau = {tau}")
    return GridMeasure(support_lo=float(x[0]), support_hi=float(x[-1]),
                       density=density / total, mass=1.0)


@dataclass(frozen=True)
class CompressionFlow:
    """The flow tau -> mu_tau = tau [mu]_tau sampled on a tau grid.

    g_field[i, j] = G(tau_i, x_j + i eps0) is the Cauchy transform of the
    mass-tau_i slice on the shared x grid; lambda_surface[i] is the quantile
    curve of that slice (r in [0, tau_i], proportional spacing).
    """

    base: GridMeasure
    tau_grid: np.ndarray          # ascending, last entry 1.0
    slices: tuple                 # GridMeasure of mass tau per entry
    g_field: np.ndarray           # complex, (n_tau, n_x)
    x_grid: np.ndarray
    eps0: float
    lambda_surface: tuple         # QuantileCurve per entry

    def slice_at(self, tau: float) -> GridMeasure:
        i = int(np.argmin(np.abs(self.tau_grid - tau)))
        return self.slices[i]

    def lam(self, r: float, tau: float) -> float:
        """lambda(r, tau) by linear interpolation between tau slices."""
        t = self.tau_grid
        if not (0.0 <= r <= tau <= t[-1]) or tau < t[0]:
            raise DomainError(f"(r, tau) = ({r}, {tau}) outside the surface")
        i = int(np.searchsorted(t, tau))
        i = min(max(i, 1), len(t) - 1)
        t0, t1 = t[i - 1], t[i]
        frac = (tau - t0) / (t1 - t0)
        # proportional r-coordinate keeps r <= tau on both bracketing slices
        l0 = self.lambda_surface[i - 1](r / tau * t0)
        l1 = self.lambda_surface[i](r / tau * t1)
        return float((1.0 - frac) * l0 + frac * l1)


def build_flow(m: GridMeasure, tau_steps: int, eps0: float = DEFAULT_EPS0, *,
               grid_size: int | None = None,
               solver_cells: int = 600) -> CompressionFlow:
    """Propagate the compression flow over tau = k/tau_steps, k = 1..tau_steps.

    Sequential continuation in tau (each Newton solve is seeded by the
    previous slice); vectorized across the x grid within a step.
    """
    if tau_steps < 4:
        raise DomainError("need tau_steps >= 4")
    if not (1e-6 < eps0 < 1e-2):
        raise DomainError("eps0 outside (1e-6, 1e-2)")
    if grid_size is None:
        grid_size = m.density.size - 1
    tau_grid = np.arange(1, tau_steps + 1) / tau_steps
    x = np.linspace(m.support_lo, m.support_hi, grid_size + 1)
    z = x + 1j * eps0
    base = m if grid_size == m.density.size - 1 else _resampled(
        m, grid_size)
    solver = _resampled(m, solver_cells)
    slices = [None] * tau_steps
    g_rows = [None] * tau_steps
    w = None
    for i in range(tau_steps - 1, -1, -1):
        tau = float(tau_grid[i])
        w, g, failed = _solve_characteristics(solver, z, tau, w0=w)
        if np.mean(failed) > 0.01:
            raise FlowError(f"flow propagation unstable at tau = {tau}",
                            residual=float(np.mean(failed)))
        g_rows[i] = g
        if tau == 1.0:
            slices[i] = base
        else:
            density = np.clip(-g.imag / math.pi, 0.0, None)
            # zero the contour-smoothing tails so slice quantiles terminate
            # at the true support edges instead of riding residual density
            density[density < 0.01 * density.max()] = 0.0
            total = np.trapezoid(density, x)
            slices[i] = GridMeasure(float(x[0]), float(x[-1]),
                                    density * (tau / total), tau)
    lam = tuple(mc.quantile_of(s, grid_size=grid_size) for s in slices)
    return CompressionFlow(base=base, tau_grid=tau_grid, slices=tuple(slices),
                           g_field=np.array(g_rows), x_grid=x, eps0=eps0,
                           lambda_surface=lam)


def burgers_residual(flow: CompressionFlow) -> float:
    """Median |G_t + G_z / G| over interior grid nodes away from the support
    edges (where the contour transform is well resolved)."""
    g = flow.g_field
    dtau = float(flow.tau_grid[1] - flow.tau_grid[0])
    dx = float(flow.x_grid[1] - flow.x_grid[0])
    gt = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * dtau)
    gz = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * dx)
    mid = g[1:-1, 1:-1]
    res = np.abs(gt + gz / mid)
    # mask nodes where the slice carries real density
    v = -mid.imag / math.pi
    mask = v > 0.1 * np.max(v, axis=1, keepdims=True)
    return float(np.median(res[mask]))


def _lambda_partials(flow: CompressionFlow, r: float, tau: float,
                     hr: float, ht: float) -> tuple:
    lr = (flow.lam(r + hr, tau) - flow.lam(r - hr, tau)) / (2 * hr)
    lt = (flow.lam(r, tau + ht) - flow.lam(r, tau - ht)) / (2 * ht)
    return lr, lt


def _dsigma0(lr: float, lt: float) -> tuple:
    """(d sigma0/d lambda_r, d sigma0/d lambda_t) for
    sigma0 = log(lambda_r) + log sin(pi lambda_t / lambda_r)."""
    ratio = lt / lr
    if not (-1.0 < ratio < 0.0):
        raise DomainError(f"lambda_t/lambda_r = {ratio} outside (-1, 0)")
    cot = 1.0 / math.tan(math.pi * ratio)
    d_lr = 1.0 / lr - math.pi * lt / lr**2 * cot
    d_lt = math.pi / lr * cot
    return d_lr, d_lt


def _sigma0_partials_row(flow: CompressionFlow, i: int, r: float) -> tuple:
    """(d sigma0/d lambda_r, d sigma0/d lambda_t) at rank r on tau row i.

    Uses the pointwise flow identities instead of differencing the quantile
    surface: with G = pi (u - i v) at the quantile point, lambda_r = 1/v,
    cot(pi lambda_t/lambda_r) = u/v, and the partials collapse to

        d sigma0 / d lambda_r = v + phi u,   phi = atan2(v, -u) in (0, pi),
        d sigma0 / d lambda_t = pi u.
    """
    s = flow.slices[i]
    x = flow.x_grid
    dens = np.interp(x, s.grid, s.density, left=0.0, right=0.0)
    cdf = np.concatenate(([0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(x))))
    if not 0.0 < r < cdf[-1]:
        raise DomainError(f"rank r = {r} outside (0, {cdf[-1]}) on the slice")
    xr = float(np.interp(r, cdf, x))
    g = flow.g_field[i]
    u = float(np.interp(xr, x, g.real)) / math.pi
    v = -float(np.interp(xr, x, g.imag)) / math.pi
    if v <= 0.0:
        raise DomainError(f"vanishing density at quantile r = {r}")
    phi = math.atan2(v, -u)
    return v + phi * u, math.pi * u


def el_residual(flow: CompressionFlow, r: float, tau: float) -> float:
    """Discrete Euler-Lagrange residual d_r[ds0/dl_r] + d_tau[ds0/dl_t] of
    the quantile surface at (r, tau), central differences on the flow grid."""
    ht = float(flow.tau_grid[1] - flow.tau_grid[0])
    hr = ht
    i = int(round(tau * len(flow.tau_grid))) - 1
    if abs(flow.tau_grid[i] - tau) > 1e-9 * len(flow.tau_grid):
        raise DomainError(f"tau = {tau} is not a flow grid row")
    if not (hr < r < tau - hr and 1 <= i <= len(flow.tau_grid) - 2):
        raise DomainError(f"stencil at (r, tau) = ({r}, {tau}) leaves the "
                          "triangular domain")
    a_p = _sigma0_partials_row(flow, i, r + hr)[0]
    a_m = _sigma0_partials_row(flow, i, r - hr)[0]
    b_p = _sigma0_partials_row(flow, i + 1, r)[1]
    b_m = _sigma0_partials_row(flow, i - 1, r)[1]
    return float((a_p - a_m) / (2 * hr) + (b_p - b_m) / (2 * ht))


def potential_evolution_check(flow: CompressionFlow) -> tuple:
    """Sup-norm discrepancies (errU, errV) of the potential evolution laws

        U_t = -(1/2 pi) log(u^2 + v^2) + (1/pi)(log t - log pi)
        V_t = (1/pi) arctan(u/v) - 1/2

    over interior tau rows and x nodes in the bulk of the support.
    """
    if len(flow.tau_grid) < 16:
        raise DomainError("flow too coarse: need tau_steps >= 16")
    x = flow.x_grid
    n_tau = len(flow.tau_grid)
    dtau = float(flow.tau_grid[1] - flow.tau_grid[0])
    upot = np.empty((n_tau, x.size))
    vpot = np.empty((n_tau, x.size))
    for i, s in enumerate(flow.slices):
        upot[i], vpot[i] = mc.log_potential_parts(s, x)
    # difference U against its exact singular part P(t) = (t log t - t)/pi,
    # P'(t) = (log t)/pi, so the log-t truncation error cancels and the
    # residual isolates the smooth remainder of the evolution law
    tg = np.asarray(flow.tau_grid, dtype=float)
    ppart = (tg * np.log(tg) - tg) / math.pi
    errU = 0.0
    errV = 0.0
    vdens = np.clip(-flow.g_field.imag / math.pi, 0.0, None)
    for i in range(1, n_tau - 1):
        g = flow.g_field[i]
        u = g.real / math.pi
        v = vdens[i]
        # the tau stencil spans three slices; stay in the bulk of all of
        # them, else the moving support edge dominates the difference
        mask = np.ones(x.size, dtype=bool)
        for k in (i - 1, i, i + 1):
            mask &= vdens[k] > 0.1 * np.max(vdens[k])
        ut = (upot[i + 1] - upot[i - 1] - (ppart[i + 1] - ppart[i - 1])) \
            / (2 * dtau)
        vt = (vpot[i + 1] - vpot[i - 1]) / (2 * dtau)
        resU = ut + np.log(u**2 + v**2) / (2 * math.pi) \
            + math.log(math.pi) / math.pi
        resV = vt - np.arctan2(u, v) / math.pi + 0.5
        if np.any(mask):
            errU = max(errU, float(np.max(np.abs(resU[mask]))))
            errV = max(errV, float(np.max(np.abs(resV[mask]))))
    return errU, errV


def _potential_rows(flow: CompressionFlow) -> tuple:
    """(upot, vdens): pi-normalized log potential U and density v = -Im G/pi
    per tau row on the flow's x grid."""
    x = flow.x_grid
    upot = np.empty((len(flow.tau_grid), x.size))
    for i, s in enumerate(flow.slices):
        upot[i], _ = mc.log_potential_parts(s, x)
    vdens = -flow.g_field.imag / math.pi
    return upot, np.clip(vdens, 0.0, None)


def partseq_check(flow: CompressionFlow) -> float:
    """Sup discrepancy over interior tau rows between int pi U_tau v dx and
    (1/2) d/dtau int pi U v dx (the self-adjointness step of the free-energy
    computation: int U_tau v = int U v_tau)."""
    if len(flow.tau_grid) < 16:
        raise DomainError("flow too coarse: need tau_steps >= 16")
    x = flow.x_grid
    dtau = float(flow.tau_grid[1] - flow.tau_grid[0])
    upot, vdens = _potential_rows(flow)
    prod = np.trapezoid(math.pi * upot * vdens, x, axis=1)
    worst = 0.0
    for i in range(1, len(flow.tau_grid) - 1):
        ut = (upot[i + 1] - upot[i - 1]) / (2 * dtau)
        lhs = float(np.trapezoid(math.pi * ut * vdens[i], x))
        rhs = 0.5 * float(prod[i + 1] - prod[i - 1]) / (2 * dtau)
        worst = max(worst, abs(lhs - rhs))
    return worst


def free_energy_identity(flow: CompressionFlow) -> tuple:
    """(flow_value, quantile_value) for the free-energy double integral.

    flow_value integrates pi U_tau(x, tau) v(x, tau) over x and tau across
    the flow; quantile_value is (1/2) iint log|rho(t) - rho(s)| dt ds
    = chi[base] - 3/4 computed directly from the base measure.  The two
    agree as the flow refines; negating and subtracting 3/4 gives the
    minimal energy -chi[base].
    """
    if len(flow.tau_grid) < 16:
        raise DomainError("flow too coarse: need tau_steps >= 16")
    x = flow.x_grid
    dtau = float(flow.tau_grid[1] - flow.tau_grid[0])
    upot, vdens = _potential_rows(flow)
    n = len(flow.tau_grid)
    ut = np.empty_like(upot)
    ut[1:-1] = (upot[2:] - upot[:-2]) / (2 * dtau)
    ut[0] = (upot[1] - upot[0]) / dtau
    ut[-1] = (upot[-1] - upot[-2]) / dtau
    rows = np.trapezoid(math.pi * ut * vdens, x, axis=1)
    # tau-integral: trapezoid on the grid plus the [0, tau_min] strip,
    # where the integrand vanishes with the slice mass
    flow_value = float(np.trapezoid(rows, flow.tau_grid)
                       + 0.5 * rows[0] * flow.tau_grid[0])
    quantile_value = mc.free_entropy(flow.base) - 0.75
    return flow_value, quantile_value


# ---------------------------------------------------------------------------
# export

def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_flow(flow: CompressionFlow, out_dir) -> None:
    """Write per-tau measure JSON files, a manifest, and the lambda surface CSV."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for tau, s in zip(flow.tau_grid, flow.slices):
        name = f"slice_tau_{tau:.6f}.json"
        _atomic_write(os.path.join(out_dir, name), s.to_json())
        names.append(name)
    manifest = {
        "tau_grid": [float(t) for t in flow.tau_grid],
        "eps0": flow.eps0,
        "x_grid_size": int(flow.x_grid.size),
        "slice_files": names,
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2))
    rows = ["r,tau,lambda"]
    for tau, q in zip(flow.tau_grid, flow.lambda_surface):
        for r, lam in zip(q.rgrid, q.values):
            rows.append(f"{r!r},{float(tau)!r},{lam!r}")
    _atomic_write(os.path.join(out_dir, "lambda_surface.csv"),
                  "\n".join(rows) + "\n")
