"""Gelfand-Tsetlin patterns and lattice GT functions.

Covers: interlacing validation, exact Weyl volumes of GT polytopes, uniform
sampling by single-site Gibbs sweeps, the eigenvalue minor process of Haar
unitarily-invariant matrices, sequential-importance estimates of
boundary-pinned triangle integrals T_A(phi), c-spaced extensions, and
Prekopa-Leindler gap checks.

Lattice conventions: the triangle Delta_n = {(i, j) in Z^2 : 0 <= j <= i <= n}
with directed edges x -> x+e1 and x -> x+e2; a GT function increases strictly
along every edge.  The interior is the set of nodes whose four lattice
neighbours all lie in Delta_n; everything else is boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconclusiveError

__all__ = [
    "GTPattern",
    "BoundaryField",
    "check_interlacing",
    "weyl_log_volume",
    "sample_uniform",
    "sample_uniform_batch",
    "minor_eigen_process",
    "minor_eigen_process_batch",
    "triangle_nodes",
    "interior_nodes",
    "boundary_nodes",
    "estimate_T",
    "spaced_extension",
    "prekopa_leindler_gap",
]

DEFAULT_BURNIN_PER_ROW = 50  # Gibbs burn-in = 50 * n sweeps


# ---------------------------------------------------------------------------
# patterns

@dataclass(frozen=True)
class GTPattern:
    """Triangular array; rows[k] holds the k+1 values of row k+1 (top = 1)."""

    n: int
    rows: tuple  # n tuples, lengths 1..n

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise DomainError(f"expected {self.n} rows, got {len(self.rows)}")
        for k, row in enumerate(self.rows):
            if len(row) != k + 1:
                raise DomainError(f"row {k + 1} has {len(row)} entries")

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "rows": [list(r) for r in self.rows]})

    @classmethod
    def from_json(cls, text: str) -> "GTPattern":
        obj = json.loads(text)
        return cls(n=obj["n"], rows=tuple(tuple(r) for r in obj["rows"]))


def check_interlacing(p: GTPattern) -> tuple:
    """(ok, first_violation): violation is the minimal (k, j), 1-indexed,
    where t_{k+1,j} <= t_{k,j} <= t_{k+1,j+1} fails."""
    for k in range(1, p.n):          # row k vs row k+1, 1-indexed
        upper = p.rows[k - 1]
        lower = p.rows[k]
        for j in range(1, k + 1):
            if not (lower[j - 1] <= upper[j - 1] <= lower[j]):
                return False, (k, j)
    return True, None


def weyl_log_volume(bottom) -> float:
    """log volume of the GT polytope over a fixed bottom row:
    -log G(n) + sum_{j<k} log(s_k - s_j), G(n) = prod_{j<=n-1} j!.

    Tied entries collapse the polytope: the result is the -inf sentinel.
    """
    s = np.asarray(bottom, dtype=float)
    n = s.size
    if np.any(np.diff(s) < 0):
        raise DomainError("bottom row must be sorted")
    diffs = s[None, :] - s[:, None]
    pairs = diffs[np.triu_indices(n, k=1)]
    if np.any(pairs <= 0.0):
        return -math.inf
    # fsum the positive and negative logs together so cancelling terms
    # (e.g. bottom (0,1,2), where the volume is exactly 1) give exactly 0.0
    terms = [math.log(p) for p in pairs]
    for j in range(1, n):
        terms.extend(-math.log(k) for k in range(2, j + 1))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Gibbs sampling of uniform patterns

def _feasible_bounds(rows, r, j0):
    """(lower, upper) for entry j0 of 0-indexed row r in a batch row list."""
    k = r + 1  # row length
    below = rows[r + 1]
    lower = below[:, j0].copy()
    upper = below[:, j0 + 1].copy()
    if r >= 1:
        above = rows[r - 1]
        if j0 >= 1:
            np.maximum(lower, above[:, j0 - 1], out=lower)
        if j0 <= k - 2:
            np.minimum(upper, above[:, j0], out=upper)
    return lower, upper


def sample_uniform_batch(bottom, sweeps: int, rng_seed: int, draws: int) -> list:
    """``draws`` independent Gibbs chains, each run for ``sweeps`` full sweeps.

    Returns the list of per-row arrays, rows[r] of shape (draws, r+1).  Each
    single-site conditional is exactly uniform on the feasible interval, so
    the stationary law is uniform on the GT polytope; sweep order is a fixed
    raster for reproducibility.
    """
    s = np.asarray(bottom, dtype=float)
    n = s.size
    if n < 2 or np.any(np.diff(s) <= 0):
        raise DomainError("bottom row must be strictly increasing, length >= 2")
    if sweeps < 1:
        raise DomainError("need sweeps >= 1")
    rng = np.random.default_rng(rng_seed)
    # feasible start: repeated midpoints strictly interlace
    rows = [None] * n
    rows[n - 1] = np.tile(s, (draws, 1))
    for r in range(n - 2, -1, -1):
        below = rows[r + 1]
        rows[r] = 0.5 * (below[:, :-1] + below[:, 1:])
    for _ in range(sweeps):
        for r in range(n - 2, -1, -1):
            for j0 in range(r + 1):
                lower, upper = _feasible_bounds(rows, r, j0)
                rows[r][:, j0] = lower + (upper - lower) * rng.random(draws)
    return rows


def sample_uniform(bottom, sweeps: int, rng_seed: int) -> GTPattern:
    """One uniform sample from the GT polytope over ``bottom``."""
    rows = sample_uniform_batch(bottom, sweeps, rng_seed, draws=1)
    return GTPattern(
        n=len(rows), rows=tuple(tuple(float(v) for v in r[0]) for r in rows))


# ---------------------------------------------------------------------------
# minor process

def _haar_unitaries(rng, draws: int, n: int) -> np.ndarray:
    """Batch of Haar unitaries: complex Ginibre + QR with the phase fix that
    makes the triangular factor's diagonal positive."""
    for _ in range(5):
        z = (rng.standard_normal((draws, n, n))
             + 1j * rng.standard_normal((draws, n, n))) / math.sqrt(2.0)
        q, r = np.linalg.qr(z)
        d = np.einsum("...ii->...i", r)
        if np.any(np.abs(d) < 1e-12):
            continue
        return q * (d / np.abs(d))[:, None, :]
    raise DomainError("degenerate Gaussian draws five times in a row")


def minor_eigen_process_batch(spectrum, rng_seed: int, draws: int) -> list:
    """Eigenvalues of all principal minors of Haar-conjugated diag(spectrum).

    Returns per-row arrays, rows[r] of shape (draws, r+1); row n-1 is the
    spectrum itself.  Tiny eigensolver roundoff is projected back onto the
    interlacing constraints so the output always validates.
    """
    s = np.asarray(spectrum, dtype=float)
    n = s.size
    if np.any(np.diff(s) <= 0):
        raise DomainError("spectrum must be strictly increasing")
    rng = np.random.default_rng(rng_seed)
    u = _haar_unitaries(rng, draws, n)
    a = np.einsum("bij,j,bkj->bik", u, s, u.conj())
    rows = [None] * n
    rows[n - 1] = np.tile(s, (draws, 1))
    for k in range(n - 1, 0, -1):
        rows[k - 1] = np.linalg.eigvalsh(a[:, :k, :k])
    # clip roundoff-scale interlacing violations, bottom row upward
    for r in range(n - 2, -1, -1):
        below = rows[r + 1]
        rows[r] = np.clip(rows[r], below[:, :-1], below[:, 1:])
    return rows


def minor_eigen_process(spectrum, rng_seed: int) -> GTPattern:
    rows = minor_eigen_process_batch(spectrum, rng_seed, draws=1)
    return GTPattern(
        n=len(rows), rows=tuple(tuple(float(v) for v in r[0]) for r in rows))


# ---------------------------------------------------------------------------
# lattice triangle and boundary fields

def triangle_nodes(n: int) -> list:
    return [(i, j) for i in range(n + 1) for j in range(i + 1)]


def interior_nodes(n: int) -> list:
    """Nodes of Delta_n whose four lattice neighbours stay in Delta_n,
    in raster order by antidiagonal (i+j), then j."""
    nodes = [(i, j) for i in range(2, n) for j in range(1, i)]
    nodes.sort(key=lambda x: (x[0] + x[1], x[1]))
    return nodes


def boundary_nodes(n: int) -> list:
    inner = set(interior_nodes(n))
    return [x for x in triangle_nodes(n) if x not in inner]


@dataclass(frozen=True)
class BoundaryField:
    """Real values on the boundary of Delta_n, optionally asserted c-spaced."""

    n: int
    values: dict  # (i, j) -> float
    spacing: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            {(int(i), int(j)): float(v) for (i, j), v in self.values.items()})
        expected = set(boundary_nodes(self.n))
        if set(self.values) != expected:
            raise DomainError("values must cover exactly the boundary of Delta_n")
        if self.spacing is not None:
            ok, pair = self.check_spaced(self.spacing)
            if not ok:
                raise DomainError(f"boundary is not {self.spacing}-spaced at {pair}")

    @classmethod
    def linear(cls, n: int, u1: float, u2: float,
               spacing: float | None = None) -> "BoundaryField":
        """The linear field phi^{u1,u2}(i, j) = u1*i + u2*j on the boundary."""
        vals = {(i, j): u1 * i + u2 * j for (i, j) in boundary_nodes(n)}
        return cls(n=n, values=vals, spacing=spacing)

    def check_spaced(self, c: float) -> tuple:
        """(ok, first violating pair) for the c-spacing inequality over all
        comparable boundary pairs."""
        nodes = sorted(self.values)
        for a in nodes:
            for b in nodes:
                if a != b and a[0] <= b[0] and a[1] <= b[1]:
                    need = c * ((b[0] - a[0]) + (b[1] - a[1]))
                    if self.values[b] - self.values[a] < need - 1e-12:
                        return False, (a, b)
        return True, None

    def combine(self, other: "BoundaryField", lam: float) -> "BoundaryField":
        if other.n != self.n:
            raise DomainError("boundary fields live on different triangles")
        vals = {x: lam * self.values[x] + (1.0 - lam) * other.values[x]
                for x in self.values}
        return BoundaryField(n=self.n, values=vals)


def _neighbors_in(x):
    return [(x[0] - 1, x[1]), (x[0], x[1] - 1)]


def _neighbors_out(x):
    return [(x[0] + 1, x[1]), (x[0], x[1] + 1)]


def _boundary_monotone(bf: BoundaryField) -> bool:
    """True iff the boundary respects strict increase along its own edges."""
    for x, vx in bf.values.items():
        for y in _neighbors_out(x):
            if y in bf.values and not (bf.values[y] > vx):
                return False
    return True


def estimate_T(boundary: BoundaryField, samples: int, rng_seed: int) -> tuple:
    """Unbiased sequential-importance estimate of the GT integral T_A(phi)
    over the interior A of Delta_n, with its standard error.

    Interior nodes are visited by antidiagonals; each value is drawn
    uniformly from the interval carved out by already-placed and boundary
    neighbours (with the global boundary extremes as fallback), and the
    product of interval lengths is the importance weight.  Every edge
    constraint is enforced exactly once, when its second endpoint is placed,
    so a draw with all intervals nonempty is a valid pattern.
    """
    if samples < 100:
        raise DomainError("need samples >= 100")
    if not _boundary_monotone(boundary):
        return 0.0, 0.0
    order = interior_nodes(boundary.n)
    if not order:
        return 1.0, 0.0
    m1 = min(boundary.values.values())
    m2 = max(boundary.values.values())
    rng = np.random.default_rng(rng_seed)
    placed = {}
    log_w = np.zeros(samples)
    alive = np.ones(samples, dtype=bool)
    for x in order:
        lower = np.full(samples, m1)
        upper = np.full(samples, m2)
        for y in _neighbors_in(x):
            if y in placed:
                np.maximum(lower, placed[y], out=lower)
            elif y in boundary.values:
                np.maximum(lower, boundary.values[y], out=lower)
        for y in _neighbors_out(x):
            if y in placed:
                np.minimum(upper, placed[y], out=upper)
            elif y in boundary.values:
                np.minimum(upper, boundary.values[y], out=upper)
        length = upper - lower
        alive &= length > 0.0
        length = np.where(alive, length, 1.0)
        # L + (U-L)*u keeps estimates exactly invariant under boundary shifts
        placed[x] = lower + length * rng.random(samples)
        log_w += np.log(length)
    w = np.where(alive, np.exp(log_w), 0.0)
    est = float(np.mean(w))
    stderr = float(np.std(w, ddof=1) / math.sqrt(samples))
    return est, stderr


def spaced_extension(boundary: BoundaryField, c: float) -> dict:
    """The c-spaced extension of a c-spaced boundary to all of Delta_n:
    subtract the linear field phi^{c,c}, extend by running maxima over
    dominated boundary nodes, add phi^{c,c} back."""
    ok, pair = boundary.check_spaced(c)
    if not ok:
        raise DomainError(f"boundary is not {c}-spaced: violated at {pair}")

    def tilt(x):
        return c * (x[0] + x[1])

    shifted = {x: v - tilt(x) for x, v in boundary.values.items()}
    out = {}
    for x in triangle_nodes(boundary.n):
        dominated = [shifted[y] for y in shifted
                     if y[0] <= x[0] and y[1] <= x[1]]
        out[x] = max(dominated) + tilt(x)
    return out


def prekopa_leindler_gap(b1: BoundaryField, b2: BoundaryField, lam: float,
                         samples: int, rng_seed: int) -> tuple:
    """log T(lam b1 + (1-lam) b2) - lam log T(b1) - (1-lam) log T(b2),
    with the propagated standard error.  The population value is >= 0 by
    log-concavity of GT volumes.
    """
    if not (0.0 < lam < 1.0):
        raise DomainError("lambda must lie in (0, 1)")
    mix = b1.combine(b2, lam)
    ests = []
    for idx, bf in enumerate((mix, b1, b2)):
        est, se = estimate_T(bf, samples, rng_seed + idx)
        if est <= 0.0:
            raise InconclusiveError(
                "a GT integral estimate vanished at this precision",
                estimates=ests + [(est, se)])
        ests.append((est, se))
    (em, sm), (e1, s1), (e2, s2) = ests
    gap = math.log(em) - lam * math.log(e1) - (1.0 - lam) * math.log(e2)
    stderr = math.sqrt((sm / em) ** 2 + (lam * s1 / e1) ** 2
                       + ((1.0 - lam) * s2 / e2) ** 2)
    return gap, stderr
