"""Guaranteed approximate model counting.

:func:`approx_count` returns a value in ``(1 ± delta)|S|`` with probability at
least ``1 - theta`` when the i-uniform families used have Boost at most ``B``
at the matching scales. Levels are sampled independently by default; with
``nested=True`` each of the ``t`` columns is one chain of refining systems,
which makes ``Z_i`` non-increasing in ``i`` and lets the level be located by
doubling plus binary search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import streams
from .bounds import batch_size, level_system
from .formula import CnfFormula
from .oracle import OracleBackend, OracleBudget
from .xorsys import FamilySpec, NestedSystem, XorSystem, sample_nested

EXACT_SMALL = "exact_small"
ESTIMATED = "estimated"
DEGRADED = "degraded"
HEURISTIC = "heuristic"


def as_fraction(x) -> Fraction:
    """Exact value of ``x``; floats are snapped to a nearby small fraction (0.333.. -> 1/3)."""
    if isinstance(x, float):
        return Fraction(x).limit_denominator(1_000_000)
    return Fraction(x)


def floor_log2(x: Fraction) -> int:
    """floor(log2 x) for a positive rational, computed exactly."""
    if x <= 0:
        raise ValueError("log of a non-positive number")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    if Fraction(2) ** k > x:
        k -= 1
    elif Fraction(2) ** (k + 1) <= x:
        k += 1
    return k


@dataclass(frozen=True)
class Constants:
    ell: int
    xi: Fraction
    b: int
    t: int
    threshold: Fraction

    def to_json(self) -> dict:
        return {
            "ell": self.ell,
            "xi": float(self.xi),
            "b": self.b,
            "t": self.t,
            "threshold": float(self.threshold),
        }


def compute_constants(
    delta,
    theta: float,
    L=0,
    B=1,
    n: int = 1,
    nested: bool = False,
    s: float | None = None,
) -> Constants:
    """Derived constants ``ell, xi, b, t`` and the level threshold ``(1-delta)(4/delta)``.

    Independent mode uses ``t = ceil((2b^2/9) ln(2n/theta))``; nested mode
    uses ``t = ceil((2b^2/9) ln(5s))`` and defaults ``s`` to ``ln(1/theta)``
    so the failure probability is again at most ``theta``.
    """
    delta = as_fraction(delta)
    B = as_fraction(B)
    L = as_fraction(L)
    if not 0 < delta <= Fraction(1, 3):
        raise ValueError(f"delta must lie in (0, 1/3], got {delta}")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if L < 0:
        raise ValueError("lower bound L must be non-negative")
    if B < 1:
        raise ValueError("Boost bound B must be at least 1")
    if n < 1:
        raise ValueError("n must be positive")
    ell = 0 if L == 0 else max(0, floor_log2(delta * L / 4))
    xi = 8 / delta
    b = math.ceil(xi + 2 * (xi + xi * xi * (B - 1)))
    if nested:
        if s is None:
            s = math.log(1 / theta)
        if 5 * s <= 1:
            raise ValueError("nested mode needs s > 1/5")
        t = math.ceil((2 * b * b / 9) * math.log(5 * s))
    else:
        t = math.ceil((2 * b * b / 9) * math.log(2 * n / theta))
    return Constants(ell, xi, b, t, (1 - delta) * (4 / delta))


def choose_level(averages: Mapping[int, Fraction | float], delta) -> int | None:
    """Greatest level whose average reaches ``(1-delta)(4/delta)``; ``None`` if none does."""
    if not averages:
        raise ValueError("no level averages given")
    delta = as_fraction(delta)
    threshold = (1 - delta) * (4 / delta)
    good = [i for i, a in averages.items() if as_fraction(a) >= threshold]
    return max(good) if good else None


@dataclass
class CounterConfig:
    delta: Fraction | float | str = Fraction(1, 3)
    theta: float = 0.2
    lower_bound: int = 0
    upper_bound: int | None = None
    boost: Fraction | float | None = None
    family: FamilySpec = field(default_factory=FamilySpec)
    nested: bool = False
    heuristic_nested: bool = False
    s: float | None = None

    def __post_init__(self):
        self.delta = as_fraction(self.delta)
        if self.nested and self.family.kind != "dense" and not self.heuristic_nested:
            raise ValueError(
                f"nested mode with the {self.family.kind} family needs heuristic_nested=True"
            )
        if self.upper_bound is not None and self.upper_bound < max(1, self.lower_bound):
            raise ValueError("upper bound below lower bound")


@dataclass
class BoostResolution:
    B: Fraction
    heuristic: bool
    source: str
    per_level: dict[int, float] = field(default_factory=dict)


def top_level(config: CounterConfig, n: int) -> int:
    """Highest level to scan: ``n``, or one above the level an upper bound U implies."""
    if config.upper_bound is None:
        return n
    q_max = max(0, floor_log2(config.delta * config.upper_bound / 4))
    return min(n, q_max + 1)


def resolve_boost(config: CounterConfig, n: int, ell: int, top: int) -> BoostResolution:
    """Pick ``B`` per family: dense is 1, ldpc can be computed, others must be given."""
    kind = config.family.kind
    if config.boost is not None:
        B = as_fraction(config.boost)
        return BoostResolution(B, heuristic=kind != "dense", source="given")
    if kind == "dense":
        return BoostResolution(Fraction(1), heuristic=False, source="pairwise independent")
    if kind == "ldpc":
        from .boost import LdpcEnsemble, boost_upper_bound

        l = config.family.column_degree
        B = Fraction(1)
        approximate = False
        per_level = {}
        for i in range(max(ell, l, 1), top + 1):
            ens = LdpcEnsemble.nearest_even(n, i, l)
            report = boost_upper_bound(ens, float(i))
            per_level[i] = report.bound
            approximate |= report.approximate
            B = max(B, report.bound_exact)
        return BoostResolution(B, heuristic=approximate, source="ldpc enumerator", per_level=per_level)
    raise ValueError(f"no Boost bound is available for the {kind} family; supply one explicitly")


@dataclass
class CountEstimate:
    value: Fraction
    chosen_level: int | None
    level_average: Fraction | None
    status: str
    degraded: bool
    heuristic: bool
    oracle_calls: int
    seed: int
    constants: Constants | None = None
    B: Fraction | None = None
    n: int = 0
    trace: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def log2_value(self) -> float:
        return math.log2(self.value) if self.value > 0 else float("-inf")

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "value_exact": f"{self.value.numerator}/{self.value.denominator}",
            "log2_value": self.log2_value if self.value > 0 else None,
            "chosen_level": self.chosen_level,
            "level_average": None if self.level_average is None else float(self.level_average),
            "status": self.status,
            "degraded": self.degraded,
            "heuristic": self.heuristic,
            "oracle_calls": self.oracle_calls,
            "seed": self.seed,
            "n": self.n,
            "B": None if self.B is None else float(self.B),
            "constants": None if self.constants is None else self.constants.to_json(),
            "levels": [{"i": i, "Z": z, "t": t} for i, z, t in self.trace],
        }


def nested_columns(
    formula: CnfFormula, family: FamilySpec, t: int, seed: int, heuristic: bool = False
) -> list[NestedSystem]:
    """The ``t`` nested chains used by nested mode for master seed ``seed``."""
    counted = formula.counted_vars
    out = []
    for j in range(t):
        chain = sample_nested(family, len(counted), streams.stream(seed, streams.NESTED, j), heuristic)
        if formula.projection is not None:
            chain = NestedSystem(chain.full.relabel(counted, formula.num_vars), family, chain.heuristic)
        out.append(chain)
    return out


class _LevelSums:
    """Computes and caches ``Z_i`` for one run."""

    def __init__(self, formula, backend, b, jobs, systems_for):
        self.formula = formula
        self.backend = backend
        self.budget = OracleBudget(b)
        self.b = b
        self.jobs = jobs
        self.systems_for = systems_for
        self.z: dict[int, int] = {}
        self.calls = 0
        self.degraded = False

    def __call__(self, i: int) -> int:
        if i not in self.z:
            systems = self.systems_for(i)
            total = 0
            step = max(batch_size(self.backend, self.jobs), 1)
            for start in range(0, len(systems), step):
                part = systems[start:start + step]
                for res in self.backend.count_many(self.formula, part, self.budget, jobs=self.jobs):
                    total += res.capped(self.b)
                    self.degraded |= res.is_timeout
            self.calls += len(systems)
            self.z[i] = total
        return self.z[i]


def _search_nested(qualifies, ell: int, top: int) -> int | None:
    """Greatest qualifying level in [ell, top] assuming qualification is monotone.

    Probes ell, ell+1, ell+2, ell+4, ... until the first failure, then
    binary-searches the last bracket. Ties go to the higher level.
    """
    if not qualifies(ell):
        return None
    lo = ell
    step = 1
    while True:
        probe = min(ell + step, top)
        if probe == lo:
            return lo
        if qualifies(probe):
            lo = probe
            step *= 2
        else:
            hi = probe - 1
            break
    while lo < hi:
        m = lo + math.ceil((hi - lo) / 2)
        if qualifies(m):
            lo = m
        else:
            hi = m - 1
    return lo


def approx_count(
    formula: CnfFormula,
    config: CounterConfig,
    backend: OracleBackend,
    seed: int,
    jobs: int = 1,
) -> CountEstimate:
    delta = config.delta
    L = Fraction(config.lower_bound)
    degraded = False

    small_cap = math.ceil(4 / delta)
    first = backend.count(formula, XorSystem.empty(formula.num_vars), OracleBudget(small_cap))
    calls = 1
    if first.kind == "exact":
        return CountEstimate(
            Fraction(first.value), None, None, EXACT_SMALL, False, False, calls, seed,
            n=len(formula.counted_vars),
        )
    degraded |= first.is_timeout

    n = len(formula.counted_vars)
    ell = compute_constants(delta, config.theta, L, 1, n).ell
    top = top_level(config, n)
    if top < ell:
        raise ValueError("upper bound leaves no level to scan")
    boost = resolve_boost(config, n, ell, top)
    heuristic = boost.heuristic or (config.nested and config.family.kind != "dense")
    const = compute_constants(delta, config.theta, L, boost.B, n, config.nested, config.s)
    t = const.t

    if config.nested:
        chains = nested_columns(formula, config.family, t, seed, config.heuristic_nested)
        sums = _LevelSums(formula, backend, const.b, jobs, lambda i: [c.prefix(i) for c in chains])
        j = _search_nested(lambda i: Fraction(sums(i), t) >= const.threshold, ell, top)
        levels = sorted(sums.z)
        if not sums.degraded:
            for a, c in zip(levels, levels[1:]):
                if sums.z[c] > sums.z[a]:
                    raise RuntimeError(f"nested level sums increase: Z_{a}={sums.z[a]} < Z_{c}={sums.z[c]}")
    else:
        def systems_for(i):
            return [
                level_system(formula, config.family, i, streams.stream(seed, streams.COUNT, i, jj))
                for jj in range(t)
            ]

        sums = _LevelSums(formula, backend, const.b, jobs, systems_for)
        for i in range(ell, top + 1):
            sums(i)
        j = choose_level({i: Fraction(z, t) for i, z in sums.z.items()}, delta)

    degraded |= sums.degraded
    calls += sums.calls
    if j is None:
        # no level reached the threshold; fall back to the lowest scanned level
        j = ell
        sums(ell)
        degraded = True
    avg = Fraction(sums.z[j], t)
    value = max(L, avg * 2 ** j)
    status = DEGRADED if degraded else HEURISTIC if heuristic else ESTIMATED
    trace = [(i, sums.z[i], t) for i in sorted(sums.z)]
    return CountEstimate(
        value, j, avg, status, degraded, heuristic, calls, seed,
        constants=const, B=boost.B, n=n, trace=trace,
    )


def plan(formula: CnfFormula, config: CounterConfig) -> dict:
    """Constants and Boost resolution without running any oracle call."""
    n = len(formula.counted_vars)
    ell = compute_constants(config.delta, config.theta, config.lower_bound, 1, n).ell
    top = top_level(config, n)
    boost = resolve_boost(config, n, ell, top)
    const = compute_constants(
        config.delta, config.theta, config.lower_bound, boost.B, n, config.nested, config.s
    )
    return {
        "n": n,
        "levels": [ell, top],
        "B": float(boost.B),
        "B_source": boost.source,
        "B_per_level": {str(k): v for k, v in boost.per_level.items()},
        "heuristic": boost.heuristic,
        "constants": const.to_json(),
        "oracle_calls_upper_bound": 1 + (top - ell + 1) * const.t,
    }
