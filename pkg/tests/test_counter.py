import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from _support import planted_formula
from ldpcount.counter import (
    CounterConfig,
    _search_nested,
    approx_count,
    choose_level,
    compute_constants,
    floor_log2,
    plan,
    resolve_boost,
)
from ldpcount.formula import CnfFormula
from ldpcount.oracle import BoundedCountResult, InternalBackend, OracleBackend
from ldpcount.xorsys import FamilySpec


def test_constants_example():
    c = compute_constants(Fraction(1, 3), 0.1, 0, 1, 14)
    assert (c.ell, c.xi, c.b, c.t) == (0, 24, 72, 6492)
    assert c.threshold == 8


def test_b_for_unit_boost():
    assert compute_constants(Fraction(1, 3), 0.2, B=1).b == 72
    assert compute_constants(0.25, 0.2, B=1).b == math.ceil(24 / 0.25)


def test_b_for_large_boost():
    assert compute_constants(Fraction(1, 3), 0.2, B=26).b == 28872


def test_float_delta_snaps():
    assert compute_constants(1 / 3, 0.2).b == 72


def test_ell_from_lower_bound():
    # delta L / 4 = 1000/12 -> floor(log2 83.3) = 6
    assert compute_constants(Fraction(1, 3), 0.2, L=1000).ell == 6
    assert compute_constants(Fraction(1, 3), 0.2, L=5).ell == 0


def test_nested_t():
    c = compute_constants(Fraction(1, 3), 0.2, nested=True)
    assert c.t == math.ceil(1152 * math.log(5 * math.log(5)))
    with pytest.raises(ValueError):
        compute_constants(Fraction(1, 3), 0.9, nested=True)


@pytest.mark.parametrize("bad", [dict(delta=0.5), dict(delta=0), dict(B=0.5), dict(L=-1), dict(theta=1.0)])
def test_constants_reject(bad):
    args = dict(delta=Fraction(1, 3), theta=0.2, L=0, B=1)
    args.update(bad)
    with pytest.raises(ValueError):
        compute_constants(**args)


@settings(max_examples=300)
@given(st.fractions(min_value=Fraction(1, 10**6), max_value=10**9))
def test_floor_log2(x):
    k = floor_log2(x)
    assert Fraction(2) ** k <= x < Fraction(2) ** (k + 1)


def test_choose_level_examples():
    third = Fraction(1, 3)
    assert choose_level(dict(enumerate([20, 12, 9, 7, 1])), third) == 2
    assert choose_level(dict(enumerate([9, 5, 9, 2])), third) == 2
    assert choose_level(dict(enumerate([5, 2])), third) is None


def test_small_count_exact():
    f = CnfFormula(2, ((1, 2),))
    est = approx_count(f, CounterConfig(), InternalBackend(), seed=0)
    assert est.value == 3 and est.status == "exact_small" and est.oracle_calls == 1


def test_unsat_exact_zero():
    f = CnfFormula(2, ((1,), (-1, 2), (-2,)))
    est = approx_count(f, CounterConfig(), InternalBackend(), seed=0)
    assert est.value == 0 and est.status == "exact_small"


def test_resolve_boost_rules():
    dense = CounterConfig()
    assert resolve_boost(dense, 10, 0, 10).B == 1
    sparse = CounterConfig(family=FamilySpec("sparse", sparse_prob=0.25))
    with pytest.raises(ValueError):
        resolve_boost(sparse, 10, 0, 10)
    assumed = CounterConfig(family=FamilySpec("sparse", sparse_prob=0.25), boost=3)
    r = resolve_boost(assumed, 10, 0, 10)
    assert r.B == 3 and r.heuristic


def test_plan_ldpc_boost_is_certified_maximum():
    f = CnfFormula(120, ((1, 2),))
    p = plan(f, CounterConfig(family=FamilySpec("ldpc", column_degree=8), upper_bound=2**116 * 12))
    assert p["B"] == max(p["B_per_level"].values())
    assert p["B_source"] == "ldpc enumerator"


def test_nested_requires_flag_for_non_dense():
    with pytest.raises(ValueError):
        CounterConfig(family=FamilySpec("subcube"), nested=True)


def test_degraded_when_no_level_qualifies():
    # a wrong caller-supplied L pushes ell above every qualifying level
    f = planted_formula(12, 2)  # |S| = 1024
    est = approx_count(f, CounterConfig(lower_bound=4096), InternalBackend(), seed=1)
    assert est.status == "degraded" and est.degraded
    assert est.chosen_level == est.constants.ell == 8
    assert est.value >= 4096


class TimingOut(OracleBackend):
    batch_size = 512

    def __init__(self):
        self.inner = InternalBackend()

    def count(self, formula, xors, budget):
        r = self.inner.count(formula, xors, budget)
        return BoundedCountResult.timed_out(r.value) if r.kind != "exact" or xors.num_rows else r


def test_timeouts_mark_degraded():
    f = planted_formula(10, 3)
    est = approx_count(f, CounterConfig(upper_bound=256), TimingOut(), seed=2)
    assert est.degraded and est.status == "degraded"


def test_sample_formula_in_range():
    # |S| = 512 at n = 12: most runs land in (1 +- 1/3) * 512
    f = planted_formula(12, 3)
    runs = 20
    outside = 0
    for k in range(runs):
        est = approx_count(f, CounterConfig(theta=0.2), InternalBackend(), seed=1000 + k)
        assert est.status == "estimated"
        outside += not (Fraction(2, 3) * 512 <= est.value <= Fraction(4, 3) * 512)
    assert outside / runs <= 0.2 + 3 * math.sqrt(0.2 * 0.8 / runs)


def test_nested_z_monotone_and_deterministic():
    f = planted_formula(10, 2)
    cfg = CounterConfig(nested=True, theta=0.2)
    a = approx_count(f, cfg, InternalBackend(), seed=8)
    b = approx_count(f, cfg, InternalBackend(), seed=8, jobs=3)
    assert a.to_json() == b.to_json()
    zs = [z for _, z, _ in a.trace]
    assert zs == sorted(zs, reverse=True)


def test_same_seed_same_estimate():
    f = planted_formula(9, 1)
    cfg = CounterConfig(upper_bound=2**9)
    a = approx_count(f, cfg, InternalBackend(), seed=5)
    b = approx_count(f, cfg, InternalBackend(), seed=5, jobs=4)
    assert a.to_json() == b.to_json()


@settings(max_examples=300)
@given(cut=st.integers(-1, 30), ell=st.integers(0, 10), top=st.integers(0, 30))
def test_nested_search_finds_last_true(cut, ell, top):
    if top < ell:
        return
    probed = []

    def q(i):
        assert ell <= i <= top
        probed.append(i)
        return i <= cut

    got = _search_nested(q, ell, top)
    want = None if cut < ell else min(cut, top)
    assert got == want
    assert len(probed) <= 2 * math.ceil(math.log2(top - ell + 2)) + 2
