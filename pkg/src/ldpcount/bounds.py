"""One-sided lower bounds on the model count.

:func:`decide_at_least` answers "is |S| >= 2^i?" with either ``yes`` (wrong
with probability at most theta) or ``dont_know``. :func:`augment_lower_bound`
improves a known lower bound on log2|S| by doubling-binary search, running
full-strength tests only on the final candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from . import streams
from .formula import CnfFormula
from .oracle import OracleBackend, OracleBudget
from .xorsys import FamilySpec, XorSystem, sample_system


def iterations_for(theta: float, cap: int = 4, threshold: float = 2) -> int:
    """Iterations so that a wrong ``yes`` has probability at most ``theta``.

    A wrong ``yes`` needs Z/t >= threshold while E[Y] < 1, with 0 <= Y <= cap;
    Hoeffding gives exp(-2t((threshold-1)/cap)^2). With cap 4 and threshold 2
    this is ceil(8 ln(1/theta)).
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if threshold <= 1:
        raise ValueError("threshold must exceed 1")
    return math.ceil(cap * cap * math.log(1 / theta) / (2 * (threshold - 1) ** 2))


def level_system(
    formula: CnfFormula, family: FamilySpec, i: int, rng
) -> XorSystem:
    """Sample an ``i``-row system over the formula's counted variables.

    LDPC systems need at least ``l`` rows; below that the dense family is
    used (it is i-uniform and pairwise independent).
    """
    counted = formula.counted_vars
    k = len(counted)
    if family.kind == "ldpc" and i < family.column_degree:
        family = FamilySpec("dense")
    local = sample_system(family, k, i, rng)
    if formula.projection is None:
        return local
    return local.relabel(counted, formula.num_vars)


def batch_size(backend: OracleBackend, jobs: int) -> int:
    return max(jobs, getattr(backend, "batch_size", 1))


@dataclass
class LowerBoundVerdict:
    i: int
    yes: bool
    ys: list[int]
    z: int
    t: int
    degraded: bool = False
    seed: int | None = None

    @property
    def iterations(self) -> int:
        return len(self.ys)

    @property
    def verdict(self) -> str:
        return "yes" if self.yes else "dont_know"

    def to_json(self) -> dict:
        return {
            "i": self.i,
            "verdict": self.verdict,
            "Z": self.z,
            "t": self.t,
            "iterations": self.iterations,
            "Y": self.ys,
            "degraded": self.degraded,
            "seed": self.seed,
        }


def decide_at_least(
    formula: CnfFormula,
    i: int,
    theta: float,
    family: FamilySpec,
    backend: OracleBackend,
    seed: int,
    iterations: int | None = None,
    cap: int = 4,
    threshold: float = 2,
    salt: int = 0,
    jobs: int = 1,
) -> LowerBoundVerdict:
    n = len(formula.counted_vars)
    if not 0 <= i <= n:
        raise ValueError(f"level {i} outside [0, {n}]")
    t = iterations if iterations is not None else iterations_for(theta, cap, threshold)
    if t < 1:
        raise ValueError("need at least one iteration")
    budget = OracleBudget(cap)
    ys: list[int] = []
    z = 0
    degraded = False
    step = batch_size(backend, jobs)
    j = 0
    while j < t and z < threshold * t:
        hi = min(t, j + step)
        systems = [
            level_system(formula, family, i, streams.stream(seed, streams.LOWER, salt, i, jj))
            for jj in range(j, hi)
        ]
        for res in backend.count_many(formula, systems, budget, jobs=jobs):
            if j >= t or z >= threshold * t:
                break
            # a timeout contributes what was found, never more than min(cap, |S ∩ R|)
            y = res.capped(cap)
            degraded |= res.is_timeout
            ys.append(y)
            z += y
            j += 1
    return LowerBoundVerdict(i, z >= threshold * t, ys, z, t, degraded, seed)


@dataclass
class Probe:
    i: int
    iterations: int
    yes: bool


@dataclass
class AugmentResult:
    bound: int
    probes: list[Probe] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "probes": [{"i": p.i, "t": p.iterations, "yes": p.yes} for p in self.probes],
        }


def augment_lower_bound(
    formula: CnfFormula,
    ell: int,
    theta: float,
    family: FamilySpec,
    backend: OracleBackend | None,
    seed: int,
    decide: Callable[[int, int], bool] | None = None,
    n: int | None = None,
    jobs: int = 1,
) -> AugmentResult:
    """Given ``0 <= ell <= log2|S|``, return ``i >= ell`` with ``|S| >= 2^i`` w.p. ``1 - theta``.

    ``decide(i, t)`` runs the lower-bound test at level ``i`` with ``t``
    iterations; by default it is :func:`decide_at_least` with a fresh random
    stream per probe. Probes above ``n`` answer ``dont_know`` since
    ``|S| <= 2^n``.
    """
    if n is None:
        n = len(formula.counted_vars)
    if ell < 0:
        raise ValueError("ell must be non-negative")
    probes: list[Probe] = []

    if decide is None:
        def decide(i, t):
            return decide_at_least(
                formula, i, theta, family, backend, seed,
                iterations=t, salt=len(probes) + 1, jobs=jobs,
            ).yes

    def test(i: int, t: int) -> bool:
        yes = False if i > n else bool(decide(i, t))
        probes.append(Probe(i, t, yes))
        return yes

    j = 0
    while test(ell + 2 ** j, 1):
        j += 1
    if j == 0:
        return AugmentResult(ell, probes)

    h = ell + 2 ** j - 1
    i = ell + 2 ** (j - 1)
    while i < h:
        m = i + math.ceil((h - i) / 2)
        if test(m, 1):
            i = m
        else:
            h = m - 1

    full = math.ceil(8 * math.log(max(1, math.ceil(math.log2(max(n, 1)))) / theta))
    j = 1
    while True:
        i -= 2 ** j
        j += 1
        if i <= ell or test(i, full):
            break
    return AugmentResult(max(ell, i), probes)
