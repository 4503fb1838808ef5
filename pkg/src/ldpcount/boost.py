"""Boost upper bounds for bi-regular LDPC ensembles, plus Monte-Carlo Boost.

Everything on the exact path (binomials, enumerator coefficients, densities,
``B(z)``) is a :class:`fractions.Fraction`; floats appear only in the entropy
inversion that locates ``z`` and in the final report.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .xorsys import FamilySpec, sample_system

Z_SLACK = 1e-9


class BoostBoundError(ValueError):
    """The bound cannot be certified (e.g. the density is not monotone up to z)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def entropy_inverse(y: float, tol: float = 1e-12) -> float:
    """Smallest x in [0, 1/2] with h(x) = y, by bisection."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"entropy inverse needs y in [0, 1], got {y}")
    if y >= 1.0:
        return 0.5  # h is flat at its peak; bisection would stall short of it
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return hi if y > 0 else 0.0


@dataclass(frozen=True)
class LdpcEnsemble:
    """``n`` variables, ``i`` equations, column degree ``l``, row degree ``r``.

    ``approximate`` marks a uniform stand-in for a mixed-degree ensemble
    (``l*n != r*i``); its enumerator uses ``i*r`` check sockets.
    """

    n: int
    i: int
    l: int
    r: int
    approximate: bool = False

    def __post_init__(self):
        if min(self.n, self.i, self.l, self.r) < 1:
            raise ValueError("ensemble parameters must be positive")
        if self.r > self.n:
            raise ValueError(f"row degree {self.r} exceeds n={self.n}")
        if not self.approximate and self.l * self.n != self.r * self.i:
            raise ValueError(f"l*n = {self.l * self.n} != r*i = {self.r * self.i}")

    @classmethod
    def uniform(cls, n: int, i: int, l: int) -> "LdpcEnsemble":
        r, rem = divmod(l * n, i)
        if rem:
            raise ValueError(f"l*n/i = {l * n}/{i} is not an integer")
        return cls(n, i, l, r)

    @classmethod
    def nearest_even(cls, n: int, i: int, l: int) -> "LdpcEnsemble":
        """Uniform ensemble with the even row degree closest to ``l*n/i``."""
        exact, rem = divmod(l * n, i)
        if rem == 0 and exact % 2 == 0:
            return cls(n, i, l, exact)
        r = 2 * max(1, round(l * n / i / 2))
        return cls(n, i, l, min(r, n - n % 2), approximate=True)

    @property
    def check_sockets(self) -> int:
        return self.i * self.r


@lru_cache(maxsize=256)
def _power_coeffs(r: int, i: int, max_degree: int) -> tuple[int, ...]:
    """Coefficients of ``(sum_k C(r, 2k) x^{2k})^i`` up to ``max_degree``."""
    base = [0] * (max_degree + 1)
    for k in range(0, min(r, max_degree) + 1, 2):
        base[k] = math.comb(r, k)

    def mul(a, b):
        out = [0] * (max_degree + 1)
        for da, ca in enumerate(a):
            if ca:
                for db in range(0, max_degree + 1 - da):
                    cb = b[db]
                    if cb:
                        out[da + db] += ca * cb
        return out

    result = [1] + [0] * max_degree
    power = base
    e = i
    while e:
        if e & 1:
            result = mul(result, power)
        e >>= 1
        if e:
            power = mul(power, power)
    return tuple(result)


def _check_weight(ens: LdpcEnsemble, w: int) -> None:
    if not 0 <= w <= ens.n:
        raise ValueError(f"weight {w} outside [0, {ens.n}]")


def _density_list(ens: LdpcEnsemble, upto: int) -> list[Fraction]:
    coeffs = _power_coeffs(ens.r, ens.i, upto * ens.l)
    sockets = ens.check_sockets
    return [Fraction(coeffs[d * ens.l], math.comb(sockets, d * ens.l)) for d in range(upto + 1)]


def codewords(ens: LdpcEnsemble, w: int) -> Fraction:
    """Expected number of weight-``w`` codewords (average weight enumerator)."""
    _check_weight(ens, w)
    return math.comb(ens.n, w) * _density_list(ens, w)[w]


def density(ens: LdpcEnsemble, d: int) -> Fraction:
    """f(d) = codewords(d) / C(n, d)."""
    _check_weight(ens, d)
    return _density_list(ens, d)[d]


@dataclass(frozen=True)
class BoostBoundReport:
    n: int
    i: int
    l: int
    r: int
    log2_m: float
    z: int
    bz: Fraction
    bound_exact: Fraction
    monotonicity_verified: bool
    approximate: bool = False

    @property
    def bound(self) -> float:
        return float(self.bound_exact)

    @property
    def bound_ceil(self) -> int:
        return math.ceil(self.bound_exact)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "i": self.i,
            "l": self.l,
            "r": self.r,
            "log2_M": self.log2_m,
            "z": self.z,
            "Bz": f"{self.bz.numerator}/{self.bz.denominator}",
            "Bz_float": float(self.bz),
            "bound": self.bound,
            "bound_ceil": self.bound_ceil,
            "monotonicity_verified": self.monotonicity_verified,
            "approximate": self.approximate,
        }


def hamming_radius(n: int, log2_m: float) -> int:
    """z = ceil(n h^{-1}((log2 M - 1)/n)), at least 1, guarded against float noise."""
    y = (log2_m - 1.0) / n
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"log2 M = {log2_m} outside [1, n+1] for n={n}")
    z = max(1, math.ceil(n * entropy_inverse(y) - Z_SLACK))
    assert binary_entropy(min(z / n, 0.5)) >= y - Z_SLACK, "entropy sandwich (upper) violated"
    assert binary_entropy((z - 1) / n) <= y + Z_SLACK, "entropy sandwich (lower) violated"
    return z


def boost_upper_bound(ens: LdpcEnsemble, log2_m: float) -> BoostBoundReport:
    """Certified upper bound on Boost(D_i, M) for an even-degree ensemble.

    Raises :class:`BoostBoundError` (with the report attached) if the density
    is not non-increasing on ``0..z``, since the bound is then not valid.
    """
    if ens.l % 2 or ens.r % 2:
        raise ValueError(f"bound implemented for even l and r (got l={ens.l}, r={ens.r})")
    if log2_m < 1:
        raise ValueError("M must be at least 2")
    z = hamming_radius(ens.n, log2_m)
    if z > ens.n:
        raise ValueError("radius exceeds n")
    f = _density_list(ens, min(z, ens.n))
    monotone = all(f[d] >= f[d + 1] for d in range(min(z, ens.n)))
    num = sum(math.comb(ens.n, d) * f[d] for d in range(z))
    den = sum(math.comb(ens.n, d) for d in range(z))
    bz = Fraction(num) / den
    report = BoostBoundReport(
        n=ens.n,
        i=ens.i,
        l=ens.l,
        r=ens.r,
        log2_m=float(log2_m),
        z=z,
        bz=bz,
        bound_exact=(1 << ens.i) * bz,
        monotonicity_verified=monotone,
        approximate=ens.approximate,
    )
    if not monotone:
        raise BoostBoundError(
            f"density not monotone up to z={z} for n={ens.n}, i={ens.i}", report
        )
    return report


def boost_table(l: int, rate: Fraction, n_values: Sequence[int]) -> list[BoostBoundReport]:
    """One bound per ``n`` with ``i = rate*n`` equations at scale ``M = 2^i``."""
    rate = Fraction(rate)
    rows = []
    for n in n_values:
        i = rate * n
        if i.denominator != 1 or i < 1:
            raise ValueError(f"rate {rate} times n={n} is not a positive integer")
        ens = LdpcEnsemble.uniform(n, int(i), l)
        rows.append(boost_upper_bound(ens, float(i)))
    return rows


# --- Monte-Carlo Boost ----------------------------------------------------

def _as_int(sigma) -> int:
    if isinstance(sigma, (int, np.integer)):
        return int(sigma)
    return sum(1 << k for k, bit in enumerate(sigma) if int(bit))


@dataclass(frozen=True)
class BoostEstimate:
    value: float
    stderr: float
    trials: int
    exact: Fraction | None = None


def estimate_boost_mc(
    family: FamilySpec,
    n: int,
    i: int,
    witnesses: Sequence,
    trials: int,
    rng: np.random.Generator | None = None,
    exact: bool = False,
) -> BoostEstimate:
    """Pair-correlation average over ``witnesses`` for ``i``-row systems.

    Estimates ``(1/(|S|(|S|-1))) sum_{s != t} Pr[s,t in R] / (Pr[s in R] Pr[t in R])``
    for the given set ``S`` (a lower bound on Boost at scale ``|S|``).
    i-uniformity fixes the denominator at ``2^{-2i}``. Exact mode enumerates
    every dense system and counts ordered pairs inside ``R``.
    """
    points = [_as_int(s) for s in witnesses]
    if len(points) < 2:
        raise ValueError("need at least two witnesses")
    if len(set(points)) != len(points):
        raise ValueError("witnesses must be distinct")
    m = len(points)
    scale = Fraction(1 << (2 * i), m * (m - 1))
    pts = np.array(points, dtype=np.int64)

    if exact:
        if family.kind != "dense":
            raise ValueError("exact mode enumerates dense systems only")
        if i * n > 20:
            raise ValueError("exact mode limited to i*n <= 20")
        total = 0
        for entries in itertools.product(range(1 << n), repeat=i):
            syn = np.zeros(m, dtype=np.int64)
            for k, mask in enumerate(entries):
                syn |= (np.bitwise_count(pts & mask).astype(np.int64) & 1) << k
            # Each rhs value b selects the witnesses whose syndrome is b.
            _, counts = np.unique(syn, return_counts=True)
            total += int((counts * (counts - 1)).sum())
        value = scale * Fraction(total, 1 << (i * n + i))
        return BoostEstimate(float(value), 0.0, 0, exact=value)

    if rng is None:
        raise ValueError("Monte-Carlo mode needs an rng")
    # Every family draws b uniformly and independently of A, so
    # Pr[s, t in R] = 2^-i Pr[A(s xor t) = 0]; averaging the kernel indicator
    # over sampled A is unbiased and far less noisy than counting |S ∩ R|.
    a, b = np.triu_indices(m, k=1)
    diffs = pts[a] ^ pts[b]
    vals = np.empty(trials, dtype=np.float64)
    for k in range(trials):
        system = sample_system(family, n, i, rng)
        zero = np.ones(len(diffs), dtype=bool)
        for mask in system.masks:
            zero &= (np.bitwise_count(diffs & mask) & 1) == 0
        vals[k] = zero.mean()
    scale = float(1 << i)
    value = scale * vals.mean()
    stderr = scale * vals.std(ddof=1) / math.sqrt(trials) if trials > 1 else float("inf")
    return BoostEstimate(float(value), float(stderr), trials)
