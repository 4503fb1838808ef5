import sys
import textwrap
import time

import numpy as np
import pytest

from _support import brute_count, random_formula, random_xors
from ldpcount.formula import CnfFormula
from ldpcount.oracle import (
    BoundedCountResult,
    CryptoMiniSatProtocol,
    ExternalBackend,
    InternalBackend,
    OracleBudget,
    OracleError,
    ReferenceBackend,
    bounded_count,
    chunk_xor,
    chunked_formula,
    encode_query,
    gray_code_count,
    interpret_transcript,
    parity_clauses,
    run_external,
)
from ldpcount.xorsys import XorSystem

OR2 = CnfFormula(2, ((1, 2),))


def test_examples():
    be = InternalBackend()
    assert bounded_count(OR2, XorSystem.empty(2), OracleBudget(10), be) == BoundedCountResult.exact(3)
    assert bounded_count(OR2, XorSystem(2, [(1, 2)], [1]), OracleBudget(10), be) == BoundedCountResult.exact(2)
    big = CnfFormula(4, ((1, 2, 3),))
    assert bounded_count(big, XorSystem.empty(4), OracleBudget(4), be) == BoundedCountResult.saturated(4)


def test_native_encoding_single_line():
    text = encode_query(CnfFormula(2, ((1,),)), XorSystem(2, [(1, 2)], [0]))
    assert [l for l in text.splitlines() if l.startswith("x")] == ["x -1 2 0"]


def test_chunking_arithmetic():
    chunks, nxt = chunk_xor([1, 2, 3, 4, 5], 1, 3, 6)
    assert len(chunks) == 2
    assert nxt == 7  # one auxiliary variable
    assert all(len(v) <= 4 for v, _ in chunks)
    assert len(parity_clauses([1, 2, 3], 1)) == 4


def test_chunked_query_is_pure_cnf():
    f = CnfFormula(5, ((1, 2),))
    text = encode_query(f, XorSystem(5, [(1, 2, 3, 4, 5)], [1]), "chunked", 3)
    assert not any(l.startswith("x") for l in text.splitlines())
    assert "c ind 1 2 3 4 5 0" in text


def test_backends_agree_on_random_queries():
    rng = np.random.default_rng(2024)
    internal, reference = InternalBackend(), ReferenceBackend()
    for _ in range(200):
        n = int(rng.integers(2, 11))
        f = random_formula(rng, n, int(rng.integers(0, 8)), projection=bool(rng.integers(2)))
        x = random_xors(rng, n, int(rng.integers(0, 5)))
        cap = int(rng.integers(1, 40))
        budget = OracleBudget(cap)
        truth = min(cap, brute_count(f, x))
        a = internal.count(f, x, budget)
        b = reference.count(f, x, budget)
        chunked = chunked_formula(f, x, int(rng.integers(3, 6)))
        c = internal.count(chunked, XorSystem.empty(chunked.num_vars), budget)
        assert a == b == c
        assert a.value == truth


def test_batched_matches_single_calls():
    rng = np.random.default_rng(7)
    f = random_formula(rng, 11, 6)
    systems = [random_xors(rng, 11, int(rng.integers(0, 7))) for _ in range(300)]
    be = InternalBackend()
    batch = be.count_many(f, systems, OracleBudget(9))
    single = [gray_code_count(f, s, 9) for s in systems]
    assert batch == single


def test_projection_counts_distinct_restrictions():
    rng = np.random.default_rng(11)
    be = InternalBackend()
    for _ in range(50):
        n = int(rng.integers(2, 12))
        f = random_formula(rng, n, int(rng.integers(1, 6)), projection=True)
        assert be.count(f, XorSystem.empty(n), OracleBudget(1 << n)).value == brute_count(f)


def test_timeout_never_overestimates():
    f = CnfFormula(14, ((1, 2, 3),))
    truth = brute_count(f)
    res = gray_code_count(f, XorSystem.empty(14), 10_000, deadline=time.monotonic() - 1)
    assert res.is_timeout
    assert res.capped(10_000) <= min(10_000, truth)


def test_internal_guard():
    with pytest.raises(OracleError):
        InternalBackend(max_vars=8).count(CnfFormula(9, ((1,),)), XorSystem.empty(9), OracleBudget(2))


def test_threaded_count_many_is_ordered():
    rng = np.random.default_rng(3)
    f = random_formula(rng, 8, 5)
    systems = [random_xors(rng, 8, 2) for _ in range(30)]
    be = ReferenceBackend()
    assert be.count_many(f, systems, OracleBudget(5), jobs=4) == be.count_many(f, systems, OracleBudget(5))


# --- canned transcripts --------------------------------------------------

def _transcript(solutions, complete):
    lines = []
    for sol in solutions:
        lines.append("s SATISFIABLE")
        lines.append("v " + " ".join(str(l) for l in sol) + " 0")
    if complete:
        lines.append("s UNSATISFIABLE")
    return "\n".join(lines) + "\n"


def test_transcript_exact():
    sols = [(1, -2), (-1, 2), (1, 2)]
    t = CryptoMiniSatProtocol().parse(_transcript(sols, True))
    assert interpret_transcript(t, 10, (1, 2), False) == BoundedCountResult.exact(3)


def test_transcript_saturated():
    sols = [(1, 2, 3), (1, 2, -3), (1, -2, 3), (-1, 2, 3)]
    t = CryptoMiniSatProtocol().parse(_transcript(sols, False))
    assert interpret_transcript(t, 4, (1, 2, 3), False) == BoundedCountResult.saturated(4)


def test_transcript_timeout():
    t = CryptoMiniSatProtocol().parse(_transcript([(1, 2), (-1, 2)], False))
    assert interpret_transcript(t, 10, (1, 2), True) == BoundedCountResult.timed_out(2)


def test_transcript_value_lines_may_wrap():
    text = "s SATISFIABLE\nv 1 -2\nv 3 0\ns UNSATISFIABLE\n"
    t = CryptoMiniSatProtocol().parse(text)
    assert t.solutions == [frozenset({1, 3})] and t.complete


def test_transcript_projection_duplicates():
    # two solutions identical on the counted variable, solver stopped at its limit
    t = CryptoMiniSatProtocol().parse(_transcript([(1, 2), (1, -2)], False))
    assert interpret_transcript(t, 2, (1,), False) == BoundedCountResult.timed_out(1)


def test_transcript_garbage():
    with pytest.raises(OracleError):
        CryptoMiniSatProtocol().parse("s MAYBE\n")


# --- fake solver subprocess ----------------------------------------------

# Mimics the solver's grammar, including one solution per distinct projection.
FAKE_SOLVER = textwrap.dedent(
    """
    import itertools, sys, time
    from ldpcount.formula import parse_dimacs_with_xors
    args = sys.argv[1:]
    cap = int([a for a in args if a.startswith("--maxsol=")][0].split("=")[1])
    path = args[-1]
    f, x = parse_dimacs_with_xors(open(path).read())
    sleep = float(__import__("os").environ.get("FAKE_SOLVER_SLEEP", "0"))
    found = 0
    seen = set()
    for bits in itertools.product((0, 1), repeat=f.num_vars):
        if f.satisfied_by(bits) and all(sum(bits[v - 1] for v in r) % 2 == b for r, b in zip(x.rows, x.rhs)):
            key = tuple(bits[v - 1] for v in f.counted_vars)
            if key in seen:
                continue
            seen.add(key)
            print("s SATISFIABLE")
            print("v " + " ".join(str(v if bits[v - 1] else -v) for v in range(1, f.num_vars + 1)) + " 0", flush=True)
            found += 1
            if sleep:
                time.sleep(sleep)
            if found >= cap:
                sys.exit(10)
    print("s UNSATISFIABLE")
    sys.exit(20)
    """
)


@pytest.fixture
def fake_solver(tmp_path):
    path = tmp_path / "fake_solver.py"
    path.write_text(FAKE_SOLVER)
    return [sys.executable, str(path)]


def test_external_matches_internal(fake_solver):
    rng = np.random.default_rng(5)
    ext_native = ExternalBackend(solver=fake_solver)
    ext_chunked = ExternalBackend(solver=fake_solver, encoding="chunked", chunk_size=3)
    internal = InternalBackend()
    for _ in range(6):
        n = int(rng.integers(3, 7))
        f = random_formula(rng, n, 3, projection=bool(rng.integers(2)))
        x = random_xors(rng, n, 2)
        budget = OracleBudget(int(rng.integers(1, 6)))
        want = internal.count(f, x, budget)
        assert ext_native.count(f, x, budget) == want
        assert ext_chunked.count(f, x, budget) == want


def test_external_timeout_partial(fake_solver, monkeypatch):
    monkeypatch.setenv("FAKE_SOLVER_SLEEP", "5")
    f = CnfFormula(3, ((1, 2, 3),))
    res = ExternalBackend(solver=fake_solver, timeout=1.5).count(f, XorSystem.empty(3), OracleBudget(5))
    assert res.is_timeout
    assert res.value <= 5


def test_external_missing_executable():
    with pytest.raises(OracleError):
        run_external("p cnf 1 1\n1 0\n", OracleBudget(2), solver="/nonexistent/solver")
