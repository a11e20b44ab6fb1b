"""Exact and determinantal computations for the bead model on the
semi-discrete torus [0,1) x Z_n.

A bead configuration has k beads on each of n cyclic strings, with cyclic
interlacing: between two consecutive beads on one string there is exactly one
bead on the neighbouring string.  The module provides

  * exact volumes Vol^(n)_{k,l} of the configuration sets via the alternating
    root-of-unity sum, in certified high-precision arithmetic;
  * the partition function both as a truncated series over (k, l) and in the
    closed product form over n-th roots of +-1;
  * the determinantal kernel H and correlation functions rho_m;
  * the finite-n gap between the rescaled log-volume and the surface tension.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp
import numpy as np

from .errors import CapacityError, DomainError, PrecisionError

__all__ = [
    "BeadConfig",
    "BeadVolumeTable",
    "ExactVolume",
    "SeriesResult",
    "ProductResult",
    "tilt_of",
    "exact_volume",
    "partition_series",
    "partition_product",
    "kernel_H",
    "correlation_rho",
    "asymptotic_gap",
    "mc_volume",
]

DEFAULT_PRECISION_BITS = 256
SUBSET_GUARD = 10**7
MAX_SERIES_K = 200
MAX_DET_POINTS = 12


def _circular_interlace(a, b) -> bool:
    """True iff the sorted k-lists a, b alternate around the circle [0,1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size:
        return False
    if a.size == 0:
        return True
    ab = np.all(a < b) and np.all(b[:-1] < a[1:])
    ba = np.all(b < a) and np.all(a[:-1] < b[1:])
    return bool(ab or ba)


@dataclass(frozen=True)
class BeadConfig:
    """A bead configuration: k sorted positions in [0,1) on each of n strings."""

    n: int
    k: int
    positions: tuple  # n tuples of k sorted floats in [0, 1)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise DomainError("need n >= 1 strings and k >= 1 beads per string")
        if len(self.positions) != self.n:
            raise DomainError(f"expected {self.n} strings, got {len(self.positions)}")
        flat = []
        for h, row in enumerate(self.positions):
            row = tuple(float(t) for t in row)
            if len(row) != self.k:
                raise DomainError(f"string {h} has {len(row)} beads, expected {self.k}")
            if any(not (0.0 <= t < 1.0) for t in row):
                raise DomainError(f"string {h} has a position outside [0, 1)")
            if any(row[j] >= row[j + 1] for j in range(len(row) - 1)):
                raise DomainError(f"string {h} positions are not strictly sorted")
            flat.extend(row)
        if len(set(flat)) != len(flat):
            raise DomainError("bead positions are not all distinct")
        for h in range(self.n):
            if not _circular_interlace(self.positions[h], self.positions[(h + 1) % self.n]):
                raise DomainError(f"strings {h} and {(h + 1) % self.n} do not interlace")


def tilt_of(c: BeadConfig) -> Fraction:
    """Tilt l/n: mean gap to the next bead one string up over mean same-string gap.

    Same-string toric gaps sum to 1 per string, so the denominator average is
    exactly 1/k and the tilt reduces to (sum of the q_i) / n, which is an
    integer multiple of 1/n.
    """
    total_q = 0.0
    for h in range(c.n):
        here = np.asarray(c.positions[h])
        above = np.asarray(c.positions[(h + 1) % c.n])
        # toric distance from each bead to the first bead strictly ahead
        # on the string above
        gaps = (above[None, :] - here[:, None]) % 1.0
        total_q += float(np.min(np.where(gaps == 0.0, 1.0, gaps), axis=1).sum())
    ell = round(total_q)
    if abs(total_q - ell) > 1e-9 * c.n * c.k or not (1 <= ell <= c.n - 1):
        raise DomainError(f"tilt {total_q}/{c.n} is not of the form l/n")
    return Fraction(ell, c.n)


@dataclass(frozen=True)
class ExactVolume:
    """A certified high-precision bead-configuration volume."""

    n: int
    k: int
    l: int
    value: mp.mpf
    error_bound: mp.mpf

    def __float__(self):
        return float(self.value)


def _subset_root_sums(roots, n, l):
    """Yield sums over all l-subsets of the n roots, colex order.

    Carries partial sums down the recursion so each subset costs one complex
    addition.
    """
    def rec(start, remaining, partial):
        if remaining == 0:
            yield partial
            return
        for j in range(start, n - remaining + 1):
            yield from rec(j + 1, remaining - 1, partial + roots[j])

    yield from rec(0, l, mp.mpc(0))


def exact_volume(n: int, k: int, l: int,
                 precision_bits: int = DEFAULT_PRECISION_BITS) -> ExactVolume:
    """Vol^(n)_{k,l} = (-1)^{k(l+1)}/(nk)! * sum over l-subsets of n-th roots
    of unity of (subset sum)^{nk}, with a certified error bound.

    Conventions: Vol_{0,l} = binomial(n,l); Vol_{k,0} = Vol_{k,n} = 0 for
    k >= 1.
    """
    if n < 1 or k < 0 or not (0 <= l <= n):
        raise DomainError(f"invalid (n, k, l) = ({n}, {k}, {l})")
    if math.comb(n, l) > SUBSET_GUARD:
        raise CapacityError(
            f"binomial({n},{l}) = {math.comb(n, l)} exceeds the subset guard")
    with mp.workprec(precision_bits):
        if k == 0:
            return ExactVolume(n, k, l, mp.mpf(math.comb(n, l)), mp.mpf(0))
        if l in (0, n):
            return ExactVolume(n, k, l, mp.mpf(0), mp.mpf(0))
        roots = [mp.expjpi(mp.mpf(2 * j) / n) for j in range(n)]
        total = mp.mpc(0)
        max_mag = mp.mpf(0)
        for s in _subset_root_sums(roots, n, l):
            term = s ** (n * k)
            total += term
            mag = abs(term)
            if mag > max_mag:
                max_mag = mag
        fact = mp.factorial(n * k)
        sign = -1 if (k * (l + 1)) % 2 else 1
        value = sign * total / fact
        residue = abs(mp.im(value))
        if residue > mp.mpf(2) ** (-precision_bits // 2):
            raise PrecisionError(
                f"imaginary residue {mp.nstr(residue)} exceeds certification "
                f"threshold for (n,k,l)=({n},{k},{l})")
        # roundoff certificate: each accumulated term carries ~2^-bits
        # relative error, amplified by the number of terms
        err = (math.comb(n, l) * max_mag / fact) * mp.mpf(2) ** (8 - precision_bits)
        err = err + residue
        real = mp.re(value)
        if real < -err:
            raise PrecisionError(
                f"negative volume {mp.nstr(real)} beyond certificate for "
                f"(n,k,l)=({n},{k},{l})")
        return ExactVolume(n, k, l, real, err)


@dataclass
class BeadVolumeTable:
    """Certified volumes Vol^(n)_{k,l} for 0 <= k <= k_max, 0 <= l <= n."""

    n: int
    k_max: int
    entries: dict = field(default_factory=dict)  # (k, l) -> ExactVolume

    @classmethod
    def build(cls, n: int, k_max: int,
              precision_bits: int = DEFAULT_PRECISION_BITS) -> "BeadVolumeTable":
        entries = {}
        for k in range(k_max + 1):
            for l in range(n + 1):
                entries[(k, l)] = exact_volume(n, k, l, precision_bits)
        return cls(n=n, k_max=k_max, entries=entries)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "k", "l", "value", "error_bound"])
            for (k, l) in sorted(self.entries):
                v = self.entries[(k, l)]
                writer.writerow([self.n, k, l, mp.nstr(v.value, 40),
                                 mp.nstr(v.error_bound, 10)])

    @classmethod
    def from_csv(cls, path) -> "BeadVolumeTable":
        entries = {}
        n = k_max = 0
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                n = int(row["n"])
                k, l = int(row["k"]), int(row["l"])
                k_max = max(k_max, k)
                entries[(k, l)] = ExactVolume(
                    n, k, l, mp.mpf(row["value"]), mp.mpf(row["error_bound"]))
        return cls(n=n, k_max=k_max, entries=entries)


@dataclass(frozen=True)
class SeriesResult:
    """Truncated partition series with the index where the tail bound closed."""

    value: float
    truncation_k: int
    tail_bound: float

    def __float__(self):
        return self.value


def partition_series(n: int, lam: float, T: float, tol: float = 1e-12) -> SeriesResult:
    """Z(lambda, T) = sum_{k,l} T^{nk} e^{-lambda l} Vol^(n)_{k,l}, truncated
    once the rigorous tail bound sum_{k'>k} (1+e^-lambda)^n (Tn)^{nk'}/(nk')!
    drops below tol.

    The bound uses |subset sum of roots| <= l <= n, so each volume is at most
    binomial(n,l) n^{nk}/(nk)!.
    """
    if T < 0 or tol <= 0:
        raise DomainError("need T >= 0 and tol > 0")
    prefac = (1.0 + math.exp(-lam)) ** n
    total = mp.mpf(0)
    for k in range(MAX_SERIES_K + 1):
        for l in range(n + 1):
            vol = exact_volume(n, k, l)
            total += mp.mpf(T) ** (n * k) * mp.e ** (-lam * l) * vol.value
        # tail over k' > k: ratio between consecutive terms is
        # (Tn)^n / prod of the next n integers, eventually < 1/2
        t_next = mp.mpf(T * n) ** (n * (k + 1)) / mp.factorial(n * (k + 1))
        ratio = mp.mpf(T * n) ** n * mp.factorial(n * (k + 1)) / mp.factorial(n * (k + 2))
        if ratio < 0.5:
            tail = prefac * t_next / (1 - ratio)
            if tail < tol:
                return SeriesResult(float(total), k, float(tail))
    raise CapacityError(f"tail bound not below tol={tol} within k <= {MAX_SERIES_K}")


def _roots_of_sign(n: int, theta2: int):
    """The n solutions of z^n = (-1)^theta2, as mpmath complex numbers."""
    return [mp.expjpi(mp.mpf(2 * j + theta2) / n) for j in range(n)]


@dataclass(frozen=True)
class ProductResult:
    """The four product-form partition weights Z_theta and their sum."""

    total: mp.mpf
    parts: dict  # (theta1, theta2) -> mp.mpf

    def weights(self) -> dict:
        """d_theta = Z_theta / Z."""
        return {th: z / self.total for th, z in self.parts.items()}

    def __float__(self):
        return float(self.total)


def partition_product(n: int, lam: float, T: float, dps: int = 50) -> ProductResult:
    """Closed-form Z_theta = (1/2)(-1)^{(theta1+1)(theta2+n+1)}
    prod_{z^n = (-1)^theta2} (e^{Tz} - (-1)^theta1 e^{-lambda}) and the total.

    High precision: the product overflows doubles already at moderate n*T.
    """
    parts = {}
    with mp.workdps(dps):
        for theta1 in (0, 1):
            for theta2 in (0, 1):
                prod = mp.mpc(1)
                for z in _roots_of_sign(n, theta2):
                    prod *= mp.e ** (T * z) - (-1) ** theta1 * mp.e ** (-lam)
                sign = mp.mpf(-1) ** ((theta1 + 1) * (theta2 + n + 1))
                val = sign * prod / 2
                if abs(mp.im(val)) > mp.mpf("1e-10") * max(1, abs(mp.re(val))):
                    raise PrecisionError(
                        f"Z_theta imaginary residue too large at theta="
                        f"({theta1},{theta2})")
                parts[(theta1, theta2)] = mp.re(val)
        total = sum(parts.values())
    return ProductResult(total=total, parts=parts)


def kernel_H(n: int, beta: complex, theta2: int, T: float, t: float, h: int) -> complex:
    """Determinantal kernel (T/n) sum_{z^n=(-1)^theta2} z^{1-h}
    e^{-(beta+Tz)[t]} / (1 - e^{-(beta+Tz)}) with [t] = t + 1_{t<0}."""
    if not (-1.0 < t < 1.0):
        raise DomainError(f"kernel argument t={t} outside (-1, 1)")
    z = np.exp(2j * np.pi * (np.arange(n) + theta2 / 2.0) / n)
    w = beta + T * z
    if np.any(np.abs(w) < 1e-12):
        raise DomainError("kernel pole: beta + T z vanishes at a root")
    tb = t + (1.0 if t < 0 else 0.0)
    # two algebraically equal forms, chosen per root so no exponential
    # overflows: e^{-w[t]}/(1-e^{-w}) = e^{w(1-[t])}/(e^w - 1)
    pos = w.real >= 0
    safe_pos = np.where(pos, w, 0.0)
    safe_neg = np.where(pos, 0.0, w)
    frac_pos = np.exp(-safe_pos * tb) / (1.0 - np.exp(-safe_pos) - (~pos))
    frac_neg = np.exp(safe_neg * (1.0 - tb)) / (np.exp(safe_neg) - 1.0 + 2.0 * pos)
    frac = np.where(pos, frac_pos, frac_neg)
    return complex(T / n * np.sum(z ** (1 - h) * frac))


def correlation_rho(n: int, lam: float, T: float, points) -> float:
    """m-point correlation rho_m = sum_theta d_theta det H(y_j - y_i).

    ``points`` is a list of (t, h) pairs on [0,1) x Z_n; the determinant size
    is capped at 12 to keep Hadamard roundoff growth in check.
    """
    points = [(float(t), int(h)) for (t, h) in points]
    m = len(points)
    if m > MAX_DET_POINTS:
        raise CapacityError(f"m = {m} exceeds the determinant cap {MAX_DET_POINTS}")
    if len(set(points)) != m:
        raise DomainError("correlation points must be pairwise distinct")
    weights = partition_product(n, lam, T).weights()
    total = 0.0
    for (theta1, theta2), d in weights.items():
        beta = lam + theta1 * math.pi * 1j
        mat = np.empty((m, m), dtype=complex)
        for i, (ti, hi) in enumerate(points):
            for j, (tj, hj) in enumerate(points):
                mat[i, j] = kernel_H(n, beta, theta2, T, tj - ti, hj - hi)
        total += float(d) * np.linalg.det(mat).real
    return total


def asymptotic_gap(n: int, l: int) -> float:
    """(1/n^2) log(n^{n^2} Vol^(n)_{n,l}) - sigma(l/n, 1-l/n).

    Tends to 0 like O(1/n^2) in the surface-tension asymptotics.
    """
    from .surface_tension import sigma

    if not (1 <= l <= n - 1):
        raise DomainError(f"need 1 <= l <= n-1, got l={l}")
    vol = exact_volume(n, n, l)
    if vol.value <= 0:
        raise PrecisionError(f"volume not positive for (n,n,l)=({n},{n},{l})")
    log_term = float(n * n * mp.log(n) + mp.log(vol.value)) / (n * n)
    return log_term - sigma((l / n, 1.0 - l / n))


def _valid_mask(batch: np.ndarray) -> np.ndarray:
    """Vectorized cyclic-interlacing test for sorted batches (B, n, k)."""
    _, n, _ = batch.shape
    ok = np.ones(batch.shape[0], dtype=bool)
    for h in range(n):
        a = batch[:, h, :]
        b = batch[:, (h + 1) % n, :]
        ab = np.all(a < b, axis=1) & np.all(b[:, :-1] < a[:, 1:], axis=1)
        ba = np.all(b < a, axis=1) & np.all(a[:, :-1] < b[:, 1:], axis=1)
        ok &= ab | ba
    return ok


def _tilt_counts(batch: np.ndarray) -> np.ndarray:
    """Occupation numbers l = sum of up-string gaps, for sorted (B, n, k)."""
    B, n, k = batch.shape
    total_q = np.zeros(B)
    for h in range(n):
        here = batch[:, h, :]
        above = batch[:, (h + 1) % n, :]
        gaps = (above[:, None, :] - here[:, :, None]) % 1.0
        total_q += np.min(np.where(gaps == 0.0, 1.0, gaps), axis=2).sum(axis=1)
    return np.rint(total_q).astype(int)


def mc_volume(n: int, k: int, l: int, trials: int, rng_seed: int,
              chunk: int = 200_000) -> tuple:
    """Monte-Carlo rejection estimate of Vol^(n)_{k,l} with standard error.

    Vol is the measure of the *ordered* region (string positions sorted), so
    the acceptance probability of an iid uniform draw sorted per string is
    Vol * (k!)^n and the estimate divides the correction back out.
    """
    rng = np.random.default_rng(rng_seed)
    correction = math.factorial(k) ** n
    hits = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        batch = np.sort(rng.random((b, n, k)), axis=2)
        ok = _valid_mask(batch)
        if np.any(ok):
            hits += int(np.sum(_tilt_counts(batch[ok]) == l))
        done += b
    p = hits / trials
    est = p / correction
    stderr = math.sqrt(max(p * (1.0 - p), 1.0 / trials) / trials) / correction
    return est, stderr
