"""Triangle discretization and minimization of the surface-tension energy.

A ``TriangleField`` holds a function f on the mesh {(i/m, j/m): 0 <= j <= i
<= m} of the triangle T = {0 <= t <= s <= 1}, with the diagonal f(s, s)
pinned to a quantile curve rho.  ``discrete_energy`` integrates
sigma_gt(f_s, f_t) over T; ``minimize_energy`` descends it with the legs
free (natural boundary) and only the diagonal pinned;
``compression_surface`` builds the conjectured minimizer from a compression
flow through the coordinate change f(s, t) = lambda(t, 1 - s + t); and
``ldp_log_volume`` estimates the large-deviation volume (2/N^2) log I_N(v,
delta) of lattice GT functions in a sup-norm band around N v(./N).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import measure_core as mc
from . import surface_tension as st
from .errors import ConvergenceError, DomainError, InfeasibleFieldError, PrecisionError
from .free_compression import CompressionFlow
from .measure_core import QuantileCurve

__all__ = [
    "TriangleField",
    "discrete_energy",
    "minimize_energy",
    "compression_surface",
    "ldp_log_volume",
    "rate_functional",
]


def _triangle_mask(m: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    return j <= i


@dataclass(frozen=True)
class TriangleField:
    """f on the triangular mesh; values[i, j] = f(i/m, j/m) for j <= i.

    Entries above the diagonal (j > i) are ignored.  ``diagonal_rho``, when
    set, records the quantile curve the diagonal is pinned to.
    """

    m: int
    values: np.ndarray
    diagonal_rho: QuantileCurve | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"mesh order must be >= 1, got {self.m}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.m + 1, self.m + 1):
            raise DomainError(
                f"values must have shape {(self.m + 1, self.m + 1)}, "
                f"got {vals.shape}")
        object.__setattr__(self, "values", vals)

    # -- geometry -----------------------------------------------------------

    def cell_gradients(self) -> tuple:
        """Per-cell (f_s, f_t, area): full squares below the diagonal with
        edge-averaged forward differences, half cells along the diagonal
        with one-sided differences.  Areas sum to 1/2, the triangle area."""
        m, f = self.m, self.values
        u1 = []
        u2 = []
        areas = []
        # full squares: lower-left corner (i, j) with j + 1 <= i, i + 1 <= m
        for j in range(0, m - 1):
            i = np.arange(j + 1, m)
            u1.append(0.5 * m * (f[i + 1, j] - f[i, j]
                                 + f[i + 1, j + 1] - f[i, j + 1]))
            u2.append(0.5 * m * (f[i, j + 1] - f[i, j]
                                 + f[i + 1, j + 1] - f[i + 1, j]))
            areas.append(np.full(i.size, 1.0 / m**2))
        # diagonal half cells (i, i) - (i+1, i) - (i+1, i+1)
        i = np.arange(0, m)
        u1.append(m * (f[i + 1, i] - f[i, i]))
        u2.append(m * (f[i + 1, i + 1] - f[i + 1, i]))
        areas.append(np.full(m, 0.5 / m**2))
        return (np.concatenate(u1), np.concatenate(u2), np.concatenate(areas))

    def is_feasible(self) -> bool:
        u1, u2, _ = self.cell_gradients()
        return bool(np.all(u1 > 0.0) and np.all(u2 > 0.0))

    def at(self, s: float, t: float) -> float:
        """Piecewise-linear interpolation at (s, t) in the triangle."""
        if not (0.0 <= t <= s <= 1.0):
            raise DomainError(f"({s}, {t}) outside the triangle")
        m, f = self.m, self.values
        a, b = s * m, t * m
        i0 = min(int(a), m - 1)
        j0 = min(int(b), i0)
        da, db = a - i0, b - j0
        if da >= db:  # lower triangle (i0,j0)-(i0+1,j0)-(i0+1,j0+1)
            return float(f[i0, j0] + da * (f[i0 + 1, j0] - f[i0, j0])
                         + db * (f[i0 + 1, j0 + 1] - f[i0 + 1, j0]))
        return float(f[i0, j0] + db * (f[i0, j0 + 1] - f[i0, j0])
                     + da * (f[i0 + 1, j0 + 1] - f[i0, j0 + 1]))

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values).copy()

    # -- serialization ------------------------------------------------------

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "f"])
            for i in range(self.m + 1):
                for j in range(i + 1):
                    w.writerow([repr(i / self.m), repr(j / self.m),
                                repr(float(self.values[i, j]))])

    @classmethod
    def from_csv(cls, path: str) -> "TriangleField":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        ss = sorted({float(r["s"]) for r in rows})
        m = len(ss) - 1
        vals = np.zeros((m + 1, m + 1))
        for r in rows:
            i = round(float(r["s"]) * m)
            j = round(float(r["t"]) * m)
            vals[i, j] = float(r["f"])
        return cls(m=m, values=vals)


def discrete_energy(field: TriangleField) -> float:
    """The triangle integral of sigma_gt(f_s, f_t); raises on infeasible
    cells (the +inf sentinel is an error here, not a value)."""
    return st.energy_integral(field)


# -- energy gradient --------------------------------------------------------

def _sigma_grad_arrays(u1, u2):
    """Vectorized closed-form gradient of sigma at positive (u1, u2)."""
    s = u1 + u2
    d1 = 1.0 / s - math.pi * u2 / s**2 / np.tan(math.pi * u2 / s)
    d2 = 1.0 / s - math.pi * u1 / s**2 / np.tan(math.pi * u1 / s)
    return d1, d2


def _scatter(grad, i, j, d1, d2, area, m):
    """Accumulate a full cell's energy gradient onto its four corners;
    (d1, d2) are d sigma_gt / d(u1, u2) and the averaged forward
    differences carry du/df = +-m/2 per corner."""
    c = area * 0.5 * m
    np.add.at(grad, (i, j), c * (-d1 - d2))
    np.add.at(grad, (i + 1, j), c * (d1 - d2))
    np.add.at(grad, (i, j + 1), c * (-d1 + d2))
    np.add.at(grad, (i + 1, j + 1), c * (d1 + d2))


def _energy_and_grad(m: int, f: np.ndarray) -> tuple:
    """(energy, d energy / d f) for feasible f; (inf, None) if infeasible."""
    grad = np.zeros_like(f)
    energy = 0.0
    # full squares
    for j in range(0, m - 1):
        i = np.arange(j + 1, m)
        u1 = 0.5 * m * (f[i + 1, j] - f[i, j] + f[i + 1, j + 1] - f[i, j + 1])
        u2 = 0.5 * m * (f[i, j + 1] - f[i, j] + f[i + 1, j + 1] - f[i + 1, j])
        if np.any(u1 <= 0) or np.any(u2 <= 0):
            return math.inf, None
        area = 1.0 / m**2
        s = u1 + u2
        energy -= area * np.sum(
            np.log(s) + np.log(np.sin(math.pi * u1 / s))
            + 1.0 - math.log(math.pi))
        d1, d2 = _sigma_grad_arrays(u1, u2)
        _scatter(grad, i, j, -d1, -d2, area, m)
    # diagonal half cells
    i = np.arange(0, m)
    u1 = m * (f[i + 1, i] - f[i, i])
    u2 = m * (f[i + 1, i + 1] - f[i + 1, i])
    if np.any(u1 <= 0) or np.any(u2 <= 0):
        return math.inf, None
    d1, d2 = _sigma_grad_arrays(u1, u2)
    area = 0.5 / m**2
    energy -= area * np.sum(
        np.log(u1 + u2) + np.log(np.sin(math.pi * u1 / (u1 + u2)))
        + 1.0 - math.log(math.pi))
    c = -area * m
    np.add.at(grad, (i, i), -c * d1)
    np.add.at(grad, (i + 1, i), c * (d1 - d2))
    np.add.at(grad, (i + 1, i + 1), c * d2)
    return float(energy), grad


def _initial_field(rho: QuantileCurve, m: int) -> np.ndarray:
    """f(s, t) = (rho(s) + rho(t)) / 2: pins the diagonal and is feasible
    for any strictly increasing rho."""
    r = np.array([rho(k * rho.mass / m) for k in range(m + 1)])
    if np.any(np.diff(r) <= 0):
        raise DomainError("rho must be strictly increasing on the mesh")
    return 0.5 * (r[:, None] + r[None, :])


# Richardson factor for a d^(2/3) boundary-layer profile sampled at one and
# two cells from the leg: f(0) = f(h) + (f(h) - f(2h)) / (2^(2/3) - 1).
_LAYER_K = 1.0 / (2.0 ** (2.0 / 3.0) - 1.0)
# number of leg nodes nearest each corner handled by the small-tau edge law
_CORNER_NODES = 8


def _leg_values(m: int, f: np.ndarray, rho: QuantileCurve) -> np.ndarray:
    """Recover the free-leg traces from the converged interior.

    The continuum minimizer meets the legs with infinite normal slope (the
    surface tension is asymptotically flat in the normal gradient), so the
    discrete energy is nearly flat in the leg values and descent leaves them
    biased toward the interior.  The interior rows are accurate, and normal
    to a leg the trace follows a d^(2/3) boundary layer (quantile densities
    vanish like a square root at a support edge), so each leg value is the
    power-law Richardson extrapolation of its two interior neighbors.

    Near the corner (1, 0) that stencil leaves the layer regime.  There the
    diagonal data itself fixes the trace: the leg value at distance tau from
    the corner is the support edge of the tau-compressed diagonal measure,
    which for small tau is universal in the first three free cumulants of
    rho -- edge = mean +- 2 sqrt(v0 tau) + (k3 / v0) tau.

    At the opposite end of the s = 1 leg the node at t = 1 - 1/m has no
    second interior neighbor (the triangle ends at the pinned diagonal); it
    borrows the layer increment from the adjacent column, where it varies
    slowly.
    """
    out = f.copy()
    r = np.linspace(0.0, rho.mass, 2049)
    q = np.array([rho(x) for x in r])
    mu0 = float(np.trapezoid(q, r) / rho.mass)
    v0 = float(np.trapezoid((q - mu0) ** 2, r) / rho.mass)
    k3 = float(np.trapezoid((q - mu0) ** 3, r) / rho.mass)
    a3 = k3 / v0
    corner = min(_CORNER_NODES, m - 2)
    k = _LAYER_K
    # s = 1 leg: f(1, t) is the top support edge of the mass-t slice
    for j in range(1, m):
        t = j / m
        if j <= corner:
            out[m, j] = mu0 + 2.0 * math.sqrt(v0 * t) + a3 * t
        elif j <= m - 2:
            out[m, j] = f[m - 1, j] + k * (f[m - 1, j] - f[m - 2, j])
        else:
            out[m, j] = f[m - 1, j] + k * (f[m - 1, j - 1] - f[m - 2, j - 1])
    # t = 0 leg: f(s, 0) is the bottom support edge of the mass-(1-s) slice
    for i in range(1, m):
        u = 1.0 - i / m
        if i >= m - corner:
            out[i, 0] = mu0 - 2.0 * math.sqrt(v0 * u) + a3 * u
        elif i >= 2:
            out[i, 0] = f[i, 1] - k * (f[i, 2] - f[i, 1])
        else:
            out[i, 0] = f[1, 1] - k * (f[2, 2] - f[2, 1])
    out[m, 0] = mu0  # the corner slice degenerates to a point mass
    return out


def minimize_energy(rho: QuantileCurve, m: int, tol: float = 1e-6,
                    max_iters: int = 5000) -> TriangleField:
    """Minimize the discrete energy over fields with the diagonal pinned to
    rho and natural (free) legs.

    Projected Barzilai-Borwein descent with a feasibility/monotonicity
    backtracking guard; sigma_gt's blow-up at vanishing gradients acts as an
    interior barrier, so iterates stay feasible.  Raises ConvergenceError
    (carrying the last projected-gradient norm) at the iteration cap.
    """
    if m < 8:
        raise DomainError(f"mesh order must be >= 8, got {m}")
    f = _initial_field(rho, m)
    mask = _triangle_mask(m)
    free = mask.copy()
    np.fill_diagonal(free, False)  # diagonal pinned

    energy, grad = _energy_and_grad(m, f)
    if grad is None:
        raise DomainError("initial field infeasible")
    grad = np.where(free, grad, 0.0)
    step = 1.0 / m
    f_prev = None
    g_prev = None
    for _ in range(max_iters):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            out = np.where(mask, _leg_values(m, f, rho), 0.0)
            field = TriangleField(m=m, values=out, diagonal_rho=rho)
            if not field.is_feasible():
                # fall back to the raw descent iterate: biased legs but
                # always a feasible field
                field = TriangleField(m=m, values=np.where(mask, f, 0.0),
                                      diagonal_rho=rho)
            return field
        if f_prev is not None:
            ds = (f - f_prev)[free]
            dg = (grad - g_prev)[free]
            denom = float(np.dot(dg, dg))
            if denom > 0:
                step = abs(float(np.dot(ds, dg))) / denom
            step = min(max(step, 1e-12), 1e3)
        f_prev, g_prev = f, grad
        s = step
        for _bt in range(60):
            trial = f - s * grad
            e_t, g_t = _energy_and_grad(m, trial)
            if g_t is not None and e_t <= energy:
                break
            s *= 0.5
        else:
            raise ConvergenceError(
                "line search failed to find a feasible descent step",
                residual=gnorm)
        f, energy, grad = trial, e_t, np.where(free, g_t, 0.0)
    raise ConvergenceError(
        f"iteration cap {max_iters} reached", residual=float(np.max(np.abs(grad))))


def compression_surface(flow: CompressionFlow, m: int) -> TriangleField:
    """Resample the flow's quantile surface onto the triangle mesh through
    the coordinate change (s, t) -> (r, tau) = (t, 1 - s + t)."""
    if len(flow.tau_grid) < m / 2:
        raise PrecisionError(
            f"flow with {len(flow.tau_grid)} tau slices is too coarse for "
            f"mesh order {m}: need at least m/2 slices")
    tau_lo = float(flow.tau_grid[0])
    base = flow.base
    mean = float(np.trapezoid(base.grid * base.density, base.grid) / base.mass)
    vals = np.zeros((m + 1, m + 1))
    for i in range(m + 1):
        for j in range(i + 1):
            tau = 1.0 - i / m + j / m
            if tau >= tau_lo:
                r = min(j / m, tau)
                vals[i, j] = flow.lam(r, min(tau, 1.0))
            elif tau <= 0.0:
                vals[i, j] = mean
            else:
                # below the first slice, [mu]_tau is asymptotically a
                # semicircle of variance ~ tau around the mean, so the
                # quantile surface scales like sqrt(tau)
                r = min(j / m * tau_lo / tau, tau_lo)
                vals[i, j] = mean + math.sqrt(tau / tau_lo) * (
                    flow.lam(r, tau_lo) - mean)
    return TriangleField(m=m, values=vals)


def rate_functional(field: TriangleField, base: mc.GridMeasure) -> float:
    """E_rho[f] = integral of sigma_gt(grad f) + chi[rho's measure]; zero at
    the minimizer, positive elsewhere."""
    return discrete_energy(field) + mc.free_entropy(base)


def ldp_log_volume(v: TriangleField, N: int, delta: float, samples: int,
                   rng_seed: int, pin_diagonal: bool = False,
                   normalize: bool = True) -> tuple:
    """(estimate, stderr) for the band log-volume of lattice GT functions.

    I_N(v, delta) is the volume of functions phi on {(i, j): 0 <= j <= i <=
    N} that are weakly increasing in both lattice directions and lie in the
    sup-norm band |phi_x - N v(x/N)| <= delta N at every node, diagonal
    included.  With normalize (the default) the estimate is the
    large-deviation rate of the band *probability* for a random GT function
    with the diagonal spectrum N v(i/N, i/N),

        (1/N^2) [log I_N(v, delta) - weyl_log_volume(N v diagonal)],

    which trends toward -(integral of sigma_gt(grad v) + chi[rho]) as N
    grows and delta shrinks.  Without normalize it is the raw scaled volume
    (2/N^2) log I_N(v, delta).

    Sequential importance sampling in (i + j, j) order: each node draws
    uniformly from its band interval clipped by the already-placed lower
    neighbors; the product of interval lengths is an unbiased volume weight.
    With pin_diagonal the diagonal nodes are fixed to N v exactly (zero
    bandwidth, excluded from the product), which recovers the Weyl-volume
    polytope when delta is non-binding; the known pins also clip every
    proposal to [d_j, d_i], which excludes no feasible point.

    Returns (-inf, 0.0) if every proposal is infeasible.
    """
    if N > 14:
        raise DomainError(f"N = {N} beyond desk scale (need N <= 14)")
    if N < 2:
        raise DomainError("need N >= 2")
    if delta <= 0:
        raise DomainError("delta must be > 0")
    if samples < 100:
        raise DomainError("need samples >= 100")
    target = np.full((N + 1, N + 1), np.nan)
    for i in range(N + 1):
        for j in range(i + 1):
            target[i, j] = N * v.at(i / N, j / N)
    order = sorted(((i, j) for i in range(N + 1) for j in range(i + 1)),
                   key=lambda ij: (ij[0] + ij[1], ij[1]))
    rng = np.random.default_rng(rng_seed)
    B = samples
    phi = np.full((B, N + 1, N + 1), -np.inf)
    logw = np.zeros(B)
    alive = np.ones(B, dtype=bool)
    for (i, j) in order:
        if pin_diagonal and i == j:
            phi[:, i, j] = target[i, j]
            # the pinned value must still respect the placed neighbors
            lo = np.full(B, -np.inf)
            if j <= i - 1:
                lo = np.maximum(lo, phi[:, i - 1, j])
            if j >= 1:
                lo = np.maximum(lo, phi[:, i, j - 1])
            alive &= target[i, j] >= lo
            continue
        lo = np.full(B, target[i, j] - delta * N)
        hi = target[i, j] + delta * N
        if pin_diagonal:
            # any monotone path to the diagonal bounds the node by the pins
            # d_j <= phi(i, j) <= d_i; clipping the proposal to that range
            # excludes no feasible point and tames the weight tails
            hi = min(hi, target[i, i])
            lo = np.maximum(lo, target[j, j])
        if j <= i - 1:
            lo = np.maximum(lo, phi[:, i - 1, j])
        if j >= 1:
            lo = np.maximum(lo, phi[:, i, j - 1])
        length = hi - lo
        alive &= length > 0
        length = np.where(alive, length, 1.0)
        phi[:, i, j] = lo + length * rng.random(B)
        logw += np.where(alive, np.log(length), 0.0)
    if not np.any(alive):
        return -math.inf, 0.0
    logw = np.where(alive, logw, -np.inf)
    top = float(np.max(logw))
    w = np.exp(logw - top)
    mean = float(np.mean(w))
    se_log = float(np.std(w, ddof=1) / (mean * math.sqrt(B)))
    log_vol = top + math.log(mean)
    if normalize:
        from .gt_engine import weyl_log_volume
        wl = weyl_log_volume([target[i, i] for i in range(N + 1)])
        if wl == -math.inf:
            raise DomainError(
                "normalization requires a strictly increasing diagonal")
        return (log_vol - wl) / N**2, se_log / N**2
    scale = 2.0 / N**2
    return scale * log_vol, scale * se_log
