"""Acceptance criteria A1-A12 as runnable checks.

Each ``a*`` function runs one criterion at level "fast" (reduced sample
sizes, minutes total) or "full" (the pinned configurations) and returns a
dict with the measured values, the tolerance, the pass flag, and wall-clock
seconds.  ``run_suite`` executes all of them and assembles a JSON-ready
report.  Tolerances and configurations are fixed here so the test suite and
the CLI ``verify`` subcommand agree exactly.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import bead_exact as be
from . import free_compression as fc
from . import gt_engine as ge
from . import measure_core as mc
from . import variational as va

SCHEMA_VERSION = "gtlab-acceptance/1"

_CRITERIA = {}


def _criterion(func):
    _CRITERIA[func.__name__] = func
    return func


def _result(name, description, passed, measured, tolerance, t0):
    return {
        "id": name,
        "description": description,
        "passed": bool(passed),
        "measured": measured,
        "tolerance": tolerance,
        "seconds": round(time.time() - t0, 2),
    }


@_criterion
def a1(level: str = "full") -> dict:
    """Partition function: alternating series vs product formula."""
    t0 = time.time()
    ns = (2, 3, 4) if level == "full" else (2, 3)
    lams = (0.0, 0.7, 1.5) if level == "full" else (0.0, 0.7)
    Ts = (0.1, 0.5, 1.0) if level == "full" else (0.1, 0.5)
    worst = 0.0
    for n in ns:
        for lam in lams:
            for T in Ts:
                s = be.partition_series(n, lam, T).value
                p = float(be.partition_product(n, lam, T).total)
                worst = max(worst, abs(s - p) / abs(p))
    return _result("a1", "partition series vs product, relative gap",
                   worst <= 1e-8, {"max_rel_gap": worst}, 1e-8, t0)


@_criterion
def a2(level: str = "full") -> dict:
    """Exact bead volumes vs Monte Carlo rejection on small (n, k)."""
    t0 = time.time()
    exact_ok = abs(be.exact_volume(2, 1, 1).value - 1.0) <= 1e-12
    trials = 1_000_000 if level == "full" else 200_000
    pairs = ((2, 1), (2, 2), (3, 1), (3, 2))
    zs = {}
    ok = exact_ok
    for n, k in pairs:
        for l in range(1, n):
            ev = float(be.exact_volume(n, k, l).value)
            est, se = be.mc_volume(n, k, l, trials=trials, rng_seed=2024)
            z = abs(est - ev) / se
            zs[f"{n},{k},{l}"] = float(z)
            ok &= z <= 3.0
    return _result("a2", "exact_volume(2,1,1) = 1 and MC agreement",
                   ok, {"exact_2_1_1_ok": exact_ok, "z_scores": zs},
                   {"exact": 1e-12, "z": 3.0}, t0)


@_criterion
def a3(level: str = "full") -> dict:
    """Surface-tension asymptotics: gap at l = n/2 shrinks with n."""
    t0 = time.time()
    ns = (6, 8, 10, 12) if level == "full" else (6, 8)
    gaps = [abs(be.asymptotic_gap(n, n // 2)) for n in ns]
    ok = gaps[0] < 0.1 and all(gaps[i] > gaps[i + 1]
                               for i in range(len(gaps) - 1))
    return _result("a3", "bead-volume asymptotic gap, strict shrinkage",
                   ok, {"gaps": dict(zip(map(str, ns), gaps))},
                   {"first": 0.1, "order": "strictly decreasing"}, t0)


def _rejection_gt_volume(bottom, trials, rng):
    """MC volume of the GT polytope over ``bottom`` by rejection in the
    bounding box; sampled rows are sorted, which folds prod(r!) orderings
    onto the ordered region, so the box volume is divided back out."""
    bottom = np.asarray(bottom, dtype=float)
    n = bottom.size
    dim = n * (n - 1) // 2
    W = bottom[-1] - bottom[0]
    X = bottom[0] + W * rng.random((trials, dim))
    rows = []
    idx = 0
    for r in range(1, n):
        rows.append(np.sort(X[:, idx:idx + r], axis=1))
        idx += r
    rows.append(np.broadcast_to(bottom, (trials, n)))
    acc = np.ones(trials, dtype=bool)
    for r in range(1, n):
        a, b = rows[r - 1], rows[r]
        acc &= np.all(b[:, :r] <= a, axis=1)
        acc &= np.all(a <= b[:, 1:r + 1], axis=1)
    fold = math.prod(math.factorial(r) for r in range(1, n))
    p = acc.mean()
    vol = W**dim * p / fold
    se = W**dim * acc.std() / math.sqrt(trials) / fold
    return vol, se


@_criterion
def a4(level: str = "full") -> dict:
    """Weyl volume formula: exact zero case and rejection-sampled oracles."""
    t0 = time.time()
    exact_ok = ge.weyl_log_volume([0.0, 1.0, 2.0]) == 0.0
    rng = np.random.default_rng(42)
    ns = (3, 4) if level == "full" else (3,)
    trials = 400_000 if level == "full" else 200_000
    rows = []
    ok = exact_ok
    for n in ns:
        for _ in range(3):
            s = np.sort(rng.uniform(0, 3, n))
            while np.min(np.diff(s)) < 0.2:
                s = np.sort(rng.uniform(0, 3, n))
            wl = ge.weyl_log_volume(s)
            vol, se = _rejection_gt_volume(s, trials, rng)
            z = (vol - math.exp(wl)) / se
            ok &= abs(z) <= 3.0
            rows.append({"n": n, "bottom": [round(x, 3) for x in s],
                         "weyl_vol": math.exp(wl), "mc_vol": vol, "z": z})
    return _result("a4", "weyl_log_volume(0,1,2) = 0 and rejection oracle",
                   ok, {"exact_zero": exact_ok, "trials": rows},
                   {"z": 3.0}, t0)


def _energy_distance_p(a, b, nperm, seed):
    """Two-sample energy-distance permutation test on row samples."""
    X = np.vstack([a, b])
    N = a.shape[0]
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))

    def stat(idx):
        ia, ib = idx[:N], idx[N:]
        return (2 * D[np.ix_(ia, ib)].mean() - D[np.ix_(ia, ia)].mean()
                - D[np.ix_(ib, ib)].mean())

    obs = stat(np.arange(2 * N))
    rng = np.random.default_rng(seed)
    cnt = sum(stat(rng.permutation(2 * N)) >= obs for _ in range(nperm))
    return obs, (cnt + 1) / (nperm + 1)


@_criterion
def a5(level: str = "full") -> dict:
    """Gibbs sampler vs minor process: two-sample energy-distance test."""
    t0 = time.time()
    n = 12
    draws = 2000 if level == "full" else 500
    rows_checked = (3, 6, 9) if level == "full" else (6,)
    Q = mc.quantile_of(mc.semicircle())
    spectrum = np.array([Q((i + 0.5) / n) for i in range(n)])
    gibbs = ge.sample_uniform_batch(spectrum, sweeps=200, rng_seed=11,
                                    draws=draws)
    minor = ge.minor_eigen_process_batch(spectrum, rng_seed=12, draws=draws)
    pvals = {}
    ok = True
    for r in rows_checked:
        a = np.sort(np.asarray(gibbs[r - 1]), axis=1)
        b = np.sort(np.asarray(minor[r - 1]), axis=1)
        _, p = _energy_distance_p(a, b, nperm=200, seed=5)
        pvals[str(r)] = p
        ok &= p > 0.01
    return _result("a5", "Gibbs vs minor-process rows, energy-distance p",
                   ok, {"p_values": pvals}, {"p": "> 0.01"}, t0)


@_criterion
def a6(level: str = "full") -> dict:
    """Row-tau empirical measure of Gibbs samples vs compress_measure."""
    t0 = time.time()
    n = 24
    draws = 500 if level == "full" else 250
    sweeps = 300 if level == "full" else 150
    taus = (1 / 3, 2 / 3) if level == "full" else (1 / 3,)
    Q = mc.quantile_of(mc.semicircle())
    spectrum = np.array([Q((i + 0.5) / n) for i in range(n)])
    rows = ge.sample_uniform_batch(spectrum, sweeps=sweeps, rng_seed=21,
                                   draws=draws)
    dists = {}
    ok = True
    for tau in taus:
        comp = fc.compress_measure(mc.semicircle(), tau)
        atoms = np.asarray(rows[int(tau * n) - 1]).ravel()
        edges = np.linspace(comp.support_lo, comp.support_hi, 17)
        emp, _ = np.histogram(atoms, bins=edges)
        emp = emp / atoms.size
        x = comp.grid
        cdf = np.concatenate([[0.0], np.cumsum(
            0.5 * (comp.density[1:] + comp.density[:-1]) * np.diff(x))])
        cdf /= cdf[-1]
        ref = np.diff(np.interp(edges, x, cdf))
        out_of_range = float((atoms < edges[0]).mean()
                             + (atoms > edges[-1]).mean())
        l1 = float(np.sum(np.abs(emp - ref))) + out_of_range
        dists[f"{tau:.4f}"] = l1
        ok &= l1 <= 0.08
    return _result("a6", "Gibbs row-[tau n] measure vs free compression, L1",
                   ok, {"l1": dists}, 0.08, t0)


@_criterion
def a7(level: str = "full") -> dict:
    """Compression algebra: semicircle scaling and the semigroup law."""
    t0 = time.time()
    sc = mc.semicircle()
    quarter = fc.compress_measure(sc, 0.25)
    target = mc.semicircle(variance=0.25)
    l1_scale = mc.l1_distance(quarter, target)
    half = fc.compress_measure(sc, 0.5)
    twice = fc.compress_measure(half, 0.5)
    l1_semi = mc.l1_distance(twice, quarter)
    ok = l1_scale <= 1e-2 and l1_semi <= 2e-2
    return _result("a7", "compress(sc, 1/4) scaling and semigroup, L1",
                   ok, {"l1_scaling": l1_scale, "l1_semigroup": l1_semi},
                   {"scaling": 1e-2, "semigroup": 2e-2}, t0)


_A8_PROBES = ((0.3, 0.625), (0.5, 0.75), (0.2, 0.5), (0.45, 0.875),
              (0.3, 0.5))


@_criterion
def a8(level: str = "full") -> dict:
    """Euler-Lagrange residual halves under each grid halving."""
    t0 = time.time()
    sc = mc.semicircle()
    res = {}
    for steps in (8, 16, 32):
        flow = fc.build_flow(sc, tau_steps=steps, solver_cells=400,
                             grid_size=1200)
        res[steps] = np.array([abs(fc.el_residual(flow, r, tau))
                               for (r, tau) in _A8_PROBES])
    r1 = res[8] / res[16]
    r2 = res[16] / res[32]
    ok = bool(np.all(r1 >= 2.0) and np.all(r2 >= 2.0))
    return _result("a8", "el_residual decay under two grid halvings",
                   ok, {"ratios_8_16": r1.tolist(),
                        "ratios_16_32": r2.tolist()},
                   {"ratio": ">= 2.0"}, t0)


@_criterion
def a9(level: str = "full") -> dict:
    """Energy minimization: free-entropy values and the compression surface."""
    t0 = time.time()
    m = 32
    measured = {}
    ok = True
    sc = mc.semicircle()
    fmin = va.minimize_energy(mc.quantile_of(sc), m, tol=1e-6)
    e_sc = va.discrete_energy(fmin)
    measured["energy_semicircle"] = e_sc
    ok &= abs(e_sc + 0.625) <= 2e-2
    for c in (0.5, 2.0):
        fu = va.minimize_energy(mc.quantile_of(mc.uniform(0.0, c)), m,
                                tol=1e-6)
        e_u = va.discrete_energy(fu)
        measured[f"energy_uniform_c{c}"] = e_u
        ok &= abs(e_u + math.log(c) / 2) <= 2e-2
    if level == "full":
        flow = fc.build_flow(sc, tau_steps=32, solver_cells=400,
                             grid_size=1200)
        surf = va.compression_surface(flow, m)
        mask = va._triangle_mask(m)
        sup = float(np.max(np.abs(np.where(
            mask, surf.values - fmin.values, 0.0))))
        measured["sup_vs_surface"] = sup
        ok &= sup <= 5e-2
    return _result("a9", "minimize_energy energies and surface agreement",
                   ok, measured,
                   {"energy": 2e-2, "sup": 5e-2}, t0)


@_criterion
def a10(level: str = "full") -> dict:
    """Prekopa-Leindler gap nonnegative within noise across random trials."""
    t0 = time.time()
    n = 4
    trials = 100 if level == "full" else 40
    rng = np.random.default_rng(77)
    nodes = ge.boundary_nodes(n)

    def rand_boundary():
        inc_i = np.cumsum(rng.uniform(0.4, 1.6, n))
        inc_d = np.cumsum(rng.uniform(0.4, 1.6, n))
        vals = {}
        for (i, j) in nodes:
            a = inc_i[i - 1] if i >= 1 else 0.0
            d = inc_d[j - 1] if j >= 1 else 0.0
            vals[(i, j)] = float(a + d + 0.1 * rng.uniform(-1, 1))
        return ge.BoundaryField(n=n, values=vals, spacing=None)

    passes = 0
    for _ in range(trials):
        b1, b2 = rand_boundary(), rand_boundary()
        lam = float(rng.uniform(0.2, 0.8))
        gap, se = ge.prekopa_leindler_gap(
            b1, b2, lam, samples=4000, rng_seed=int(rng.integers(1 << 31)))
        if gap >= -3.0 * se:
            passes += 1
    need = math.ceil(0.95 * trials)
    return _result("a10", "prekopa_leindler_gap >= -3 stderr rate",
                   passes >= need, {"passes": passes, "trials": trials},
                   {"min_passes": need}, t0)


@_criterion
def a11(level: str = "full") -> dict:
    """Same-string two-point correlation vs the sine-kernel determinant."""
    t0 = time.time()
    n, lam, T = 40, 0.0, 5 * math.pi
    rho1 = be.correlation_rho(n, lam, T, [(0.2, 0)])
    rels = {}
    ok = True
    for g in (0.3, 0.6, 0.9, 1.2, 1.5):
        r2 = be.correlation_rho(n, lam, T, [(0.2, 0), (0.2 + g / rho1, 0)])
        sk = 1.0 - (math.sin(math.pi * g) / (math.pi * g)) ** 2
        rel = abs(r2 / rho1**2 - sk) / sk
        rels[str(g)] = rel
        ok &= rel <= 0.05
    return _result("a11", "bead correlation vs sine kernel, relative error",
                   ok, {"density": rho1, "rel_errors": rels}, 0.05, t0)


@_criterion
def a12(level: str = "full") -> dict:
    """LDP band-volume rate trends toward the rate functional."""
    t0 = time.time()
    m = 8
    grid = np.arange(m + 1) / m
    vals = (np.add.outer(grid, grid) - 1.0) * 4.0
    v = va.TriangleField(m=m, values=vals)
    E = va.rate_functional(v, mc.uniform(-4.0, 4.0))
    samples = 400_000 if level == "full" else 100_000
    errs = []
    rates = {}
    for N in (6, 10, 14):
        est, _ = va.ldp_log_volume(v, N, 0.2, samples=samples, rng_seed=9)
        rates[str(N)] = est
        errs.append(abs(est + E))
    ok = errs[0] > errs[1] > errs[2]
    return _result("a12", "ldp_log_volume rate trend toward -E_rho[v]",
                   ok, {"target": -E, "rates": rates, "abs_errors": errs},
                   {"order": "strictly decreasing |error|"}, t0)


def run_suite(level: str = "full") -> dict:
    """Run all criteria; returns the JSON-ready report."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    t0 = time.time()
    criteria = [func(level) for func in _CRITERIA.values()]
    return {
        "schema": SCHEMA_VERSION,
        "level": level,
        "criteria": criteria,
        "passed": all(c["passed"] for c in criteria),
        "seconds": round(time.time() - t0, 2),
    }
