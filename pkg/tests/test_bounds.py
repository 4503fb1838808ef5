import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _support import planted_formula, random_formula
from ldpcount.bounds import augment_lower_bound, decide_at_least, iterations_for
from ldpcount.formula import CnfFormula
from ldpcount.oracle import BoundedCountResult, InternalBackend, OracleBackend, ReferenceBackend
from ldpcount.xorsys import FamilySpec

DENSE = FamilySpec("dense")


def test_iterations_default():
    assert iterations_for(0.05) == 24


def test_iterations_scale_with_constants():
    # cap 8, threshold 3: same Hoeffding argument, t = ceil(8 ln(1/theta))
    assert iterations_for(0.05, cap=8, threshold=3) == 24
    assert iterations_for(0.05, cap=8, threshold=2) == 96
    with pytest.raises(ValueError):
        iterations_for(0.05, threshold=1)


def test_unsat_is_dont_know():
    f = CnfFormula(3, ((1,), (-1,)))
    for i in range(4):
        v = decide_at_least(f, i, 0.05, DENSE, InternalBackend(), seed=1)
        assert not v.yes and v.z == 0 and v.iterations == v.t


def test_level_zero_yes_with_early_exit():
    f = planted_formula(6, 2)  # 16 models
    v = decide_at_least(f, 0, 0.05, DENSE, InternalBackend(), seed=3)
    assert v.yes
    assert v.ys == [4] * 12  # Z reaches 2t = 48 after 12 iterations
    assert v.to_json()["verdict"] == "yes"


def test_jobs_do_not_change_verdict():
    rng = np.random.default_rng(0)
    f = random_formula(rng, 9, 5)
    a = decide_at_least(f, 5, 0.05, DENSE, ReferenceBackend(), seed=42)
    b = decide_at_least(f, 5, 0.05, DENSE, ReferenceBackend(), seed=42, jobs=3)
    c = decide_at_least(f, 5, 0.05, DENSE, InternalBackend(), seed=42, jobs=2)
    assert a.ys == b.ys == c.ys


def test_level_out_of_range():
    with pytest.raises(ValueError):
        decide_at_least(planted_formula(4, 0), 5, 0.1, DENSE, InternalBackend(), seed=0)


def test_augment_stub_example():
    res = augment_lower_bound(None, 0, 0.05, DENSE, None, 0, decide=lambda i, t: i <= 10, n=40)
    assert res.bound == 8
    assert [p.i for p in res.probes] == [1, 2, 4, 8, 16, 12, 10, 11, 8]


def test_augment_never_yes():
    res = augment_lower_bound(None, 5, 0.05, DENSE, None, 0, decide=lambda i, t: False, n=40)
    assert res.bound == 5
    assert len(res.probes) == 1


def test_augment_always_yes_respects_n():
    res = augment_lower_bound(None, 0, 0.05, DENSE, None, 0, decide=lambda i, t: True, n=8)
    assert res.bound <= 8
    assert res.bound == 6
    assert all(not p.yes for p in res.probes if p.i > 8)


@settings(max_examples=300, deadline=None)
@given(
    ell=st.integers(0, 30),
    n=st.integers(1, 60),
    answers=st.lists(st.booleans(), min_size=1, max_size=40),
)
def test_augment_at_least_ell(ell, n, answers):
    seq = iter(answers * 10)
    res = augment_lower_bound(None, ell, 0.05, DENSE, None, 0, decide=lambda i, t: next(seq, False), n=n)
    assert res.bound >= ell


@settings(max_examples=100, deadline=None)
@given(threshold_level=st.integers(0, 40), ell=st.integers(0, 10))
def test_augment_exact_under_monotone_stub(threshold_level, ell):
    # with a truthful monotone decider the answer is a yes-level no smaller than ell
    res = augment_lower_bound(
        None, ell, 0.05, DENSE, None, 0, decide=lambda i, t: i <= threshold_level, n=64
    )
    assert res.bound >= ell
    assert res.bound <= max(ell, threshold_level)


class Truncating(OracleBackend):
    """Reports timeouts carrying fewer solutions than exist."""

    def __init__(self, inner, keep):
        self.inner = inner
        self.keep = keep

    def count(self, formula, xors, budget):
        r = self.inner.count(formula, xors, budget)
        return BoundedCountResult.timed_out(max(0, r.value - self.keep))


@pytest.mark.parametrize("keep", [1, 2, 3])
def test_timeouts_never_turn_dont_know_into_yes(keep):
    rng = np.random.default_rng(keep)
    for k in range(20):
        f = random_formula(rng, 8, 4)
        i = int(rng.integers(0, 8))
        full = decide_at_least(f, i, 0.1, DENSE, ReferenceBackend(), seed=k, iterations=12)
        cut = decide_at_least(f, i, 0.1, DENSE, Truncating(ReferenceBackend(), keep), seed=k, iterations=12)
        assert cut.degraded
        if cut.yes:
            assert full.yes


def test_ldpc_family_runs_below_column_degree():
    f = planted_formula(10, 2)
    v = decide_at_least(f, 2, 0.1, FamilySpec("ldpc", column_degree=3), InternalBackend(), seed=5)
    assert v.yes


def test_projection_levels_use_counted_vars():
    f = CnfFormula(6, ((1, 2),), frozenset({1, 2, 3}))  # 6 projected models
    v = decide_at_least(f, 3, 0.05, DENSE, InternalBackend(), seed=9)
    assert v.iterations == v.t
