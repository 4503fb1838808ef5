"""Bounded model counting: ``min(cap, |S(F) ∩ R|)``.

Two backends answer queries:

* :class:`InternalBackend` enumerates the models of ``F`` once (vectorised,
  cached per formula) and then filters them by each parity system. It is the
  trusted desk-scale oracle used by the test suite.
* :class:`ExternalBackend` writes a DIMACS query, runs a solver executable
  and parses its transcript. The transcript grammar lives in a protocol
  object so that a different solver only needs a new parser.

:func:`gray_code_count` is an independent, deliberately simple enumerator
(Gray-code order, incremental clause and parity bookkeeping) that the tests
use to cross-check the fast path.
"""

from __future__ import annotations

import itertools
import logging
import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .formula import CnfFormula, emit_dimacs
from .xorsys import XorSystem

log = logging.getLogger(__name__)

SOLVER_ENV = "LDPCOUNT_SOLVER"
DEFAULT_SOLVER = "cryptominisat5"

EXACT = "exact"
SATURATED = "saturated"
TIMED_OUT = "timed_out"


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundedCountResult:
    """``exact``: exactly ``value`` solutions (``value < cap``).
    ``saturated``: at least ``value == cap`` solutions.
    ``timed_out``: at least ``value`` solutions were found before the budget ran out.
    """

    kind: str
    value: int

    @classmethod
    def exact(cls, k: int) -> "BoundedCountResult":
        return cls(EXACT, k)

    @classmethod
    def saturated(cls, cap: int) -> "BoundedCountResult":
        return cls(SATURATED, cap)

    @classmethod
    def timed_out(cls, found: int) -> "BoundedCountResult":
        return cls(TIMED_OUT, found)

    @property
    def is_timeout(self) -> bool:
        return self.kind == TIMED_OUT

    def capped(self, cap: int) -> int:
        """A value never larger than ``min(cap, |S ∩ R|)``."""
        return min(cap, self.value)


@dataclass(frozen=True)
class OracleBudget:
    cap: int
    wall_clock: float | None = None

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError("cap must be at least 1")


def _result(count: int, cap: int) -> BoundedCountResult:
    if count >= cap:
        return BoundedCountResult.saturated(cap)
    return BoundedCountResult.exact(count)


class OracleBackend:
    """Base class. Subclasses implement :meth:`count`."""

    batch_size = 1

    def count(self, formula: CnfFormula, xors: XorSystem, budget: OracleBudget) -> BoundedCountResult:
        raise NotImplementedError

    def count_many(
        self,
        formula: CnfFormula,
        systems: Sequence[XorSystem],
        budget: OracleBudget,
        jobs: int = 1,
    ) -> list[BoundedCountResult]:
        if jobs <= 1 or len(systems) <= 1:
            return [self.count(formula, s, budget) for s in systems]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda s: self.count(formula, s, budget), systems))


def bounded_count(
    formula: CnfFormula, xors: XorSystem, budget: OracleBudget, backend: OracleBackend
) -> BoundedCountResult:
    if xors.num_vars != formula.num_vars:
        raise ValueError("xor system and formula have different numbers of variables")
    return backend.count(formula, xors, budget)


# --- internal enumeration -------------------------------------------------

_CHUNK_BITS = 16


def all_models(formula: CnfFormula) -> np.ndarray:
    """Every model of ``formula`` packed as int64 (bit ``v-1`` is ``x_v``)."""
    n = formula.num_vars
    found = []
    block = 1 << min(n, _CHUNK_BITS)
    clause_arrays = [
        (np.array([abs(l) - 1 for l in c], dtype=np.int64), np.array([l > 0 for l in c]))
        for c in formula.clauses
    ]
    for start in range(0, 1 << n, block):
        a = np.arange(start, start + block, dtype=np.int64)
        ok = np.ones(block, dtype=bool)
        for idx, positive in clause_arrays:
            bits = ((a[:, None] >> idx[None, :]) & 1).astype(bool)
            ok &= (bits == positive[None, :]).any(axis=1)
        found.append(a[ok])
    return np.concatenate(found)


def _projection_mask(formula: CnfFormula) -> int | None:
    if formula.projection is None:
        return None
    return sum(1 << (v - 1) for v in formula.projection)


def _syndrome_tables(masks: np.ndarray, n: int) -> list[tuple[int, np.ndarray]]:
    """Per 8-bit slice of the assignment, a lookup table of parity syndromes.

    ``masks`` has shape (systems, rows). The syndrome of an assignment is the
    int whose bit ``k`` is the parity of row ``k``; it is linear, so it is the
    XOR of per-slice table entries.
    """
    systems, rows = masks.shape
    weights = np.left_shift(np.int64(1), np.arange(rows, dtype=np.int64))
    tables = []
    for lo in range(0, n, 8):
        width = min(8, n - lo)
        tab = np.zeros((systems, 1 << width), dtype=np.int64)
        for k in range(width):
            col = ((masks >> (lo + k)) & 1) @ weights  # syndrome of variable lo+k+1
            span = 1 << k
            tab[:, span:2 * span] = tab[:, :span] ^ col[:, None]
        tables.append((lo, tab))
    return tables


class InternalBackend(OracleBackend):
    """Exhaustive desk-scale oracle; refuses formulas above ``max_vars``."""

    batch_size = 4096

    def __init__(self, max_vars: int = 30):
        self.max_vars = max_vars
        self._models = lru_cache(maxsize=32)(all_models)

    def models(self, formula: CnfFormula) -> np.ndarray:
        if formula.num_vars > self.max_vars:
            raise OracleError(
                f"internal oracle limited to {self.max_vars} variables (formula has {formula.num_vars})"
            )
        return self._models(formula)

    def count(self, formula, xors, budget):
        return self.count_many(formula, [xors], budget)[0]

    def count_many(self, formula, systems, budget, jobs=1):
        models = self.models(formula)
        n = formula.num_vars
        for s in systems:
            if s.num_vars != n:
                raise ValueError("xor system and formula have different numbers of variables")
        if not systems:
            return []
        proj = _projection_mask(formula)
        if proj is not None:
            return [self._count_projected(models, s, proj, budget.cap) for s in systems]
        rows = max(s.num_rows for s in systems)
        if rows == 0 or len(models) == 0:
            return [_result(len(models), budget.cap) for _ in systems]
        if rows > 62:
            return [self._count_projected(models, s, None, budget.cap) for s in systems]
        masks = np.zeros((len(systems), rows), dtype=np.int64)
        target = np.zeros(len(systems), dtype=np.int64)
        for k, s in enumerate(systems):
            masks[k, :s.num_rows] = s.masks
            target[k] = sum(b << r for r, b in enumerate(s.rhs))
        counts = np.zeros(len(systems), dtype=np.int64)
        step = max(1, 4_000_000 // max(1, len(models)))
        for start in range(0, len(systems), step):
            part = slice(start, start + step)
            syn = np.zeros((masks[part].shape[0], len(models)), dtype=np.int64)
            for lo, tab in _syndrome_tables(masks[part], n):
                idx = (models >> lo) & (tab.shape[1] - 1)
                syn ^= np.take_along_axis(tab, np.broadcast_to(idx, syn.shape), axis=1)
            counts[part] = (syn == target[part, None]).sum(axis=1)
        return [_result(int(c), budget.cap) for c in counts]

    @staticmethod
    def _count_projected(models, system, proj, cap):
        keep = np.ones(len(models), dtype=bool)
        for mask, b in zip(system.masks, system.rhs):
            keep &= (np.bitwise_count(models & mask) & 1) == b
        hits = models[keep]
        if proj is not None:
            hits = np.unique(hits & proj)
        return _result(len(hits), cap)


def gray_code_count(
    formula: CnfFormula,
    xors: XorSystem,
    cap: int,
    deadline: float | None = None,
) -> BoundedCountResult:
    """Reference enumerator over the cube in Gray-code order.

    Keeps, per clause, the number of true literals and, per parity row, the
    current parity; flipping one variable touches only the clauses and rows
    that mention it. Stops as soon as ``cap`` distinct (projected) solutions
    are found, or reports ``timed_out`` once ``deadline`` (a
    ``time.monotonic()`` value) passes.
    """
    n = formula.num_vars
    occ: list[list[tuple[int, bool]]] = [[] for _ in range(n)]
    for ci, clause in enumerate(formula.clauses):
        for lit in clause:
            occ[abs(lit) - 1].append((ci, lit > 0))
    in_rows: list[list[int]] = [[] for _ in range(n)]
    for ri, row in enumerate(xors.rows):
        for v in row:
            in_rows[v - 1].append(ri)

    assign = [0] * n
    true_lits = [sum(1 for l in c if l < 0) for c in formula.clauses]
    unsat = sum(1 for c in true_lits if c == 0)
    wrong = sum(1 for b in xors.rhs if b != 0)
    parity = [0] * xors.num_rows
    proj = formula.counted_vars if formula.projection is not None else None
    seen: set[tuple[int, ...]] = set()
    count = 0

    def record():
        nonlocal count
        if proj is None:
            count += 1
        else:
            key = tuple(assign[v - 1] for v in proj)
            if key not in seen:
                seen.add(key)
                count += 1

    if unsat == 0 and wrong == 0:
        record()
    for step in range(1, 1 << n):
        if count >= cap:
            return BoundedCountResult.saturated(cap)
        if deadline is not None and step % 1024 == 0 and time.monotonic() > deadline:
            return BoundedCountResult.timed_out(count)
        v = (step & -step).bit_length() - 1
        assign[v] ^= 1
        now = assign[v]
        for ci, positive in occ[v]:
            before = true_lits[ci]
            true_lits[ci] += 1 if now == positive else -1
            if before == 0:
                unsat -= 1
            elif true_lits[ci] == 0:
                unsat += 1
        for ri in in_rows[v]:
            was_ok = parity[ri] == xors.rhs[ri]
            parity[ri] ^= 1
            wrong += 1 if was_ok else -1
        if unsat == 0 and wrong == 0:
            record()
    return _result(count, cap)


class ReferenceBackend(OracleBackend):
    """Backend wrapper around :func:`gray_code_count`."""

    def count(self, formula, xors, budget):
        deadline = None if budget.wall_clock is None else time.monotonic() + budget.wall_clock
        return gray_code_count(formula, xors, budget.cap, deadline)


# --- query encoding -------------------------------------------------------

def parity_clauses(variables: Sequence[int], rhs: int) -> list[tuple[int, ...]]:
    """CNF of ``XOR(variables) = rhs``: one clause per forbidden assignment."""
    out = []
    for bits in itertools.product((0, 1), repeat=len(variables)):
        if sum(bits) % 2 != rhs:
            out.append(tuple(-v if b else v for v, b in zip(variables, bits)))
    return out


def chunk_xor(row: Sequence[int], rhs: int, chunk_size: int, next_var: int):
    """Split one parity row into a chain of chunks.

    Each chunk has at most ``chunk_size`` inputs (original variables plus the
    incoming link) and, except for the last, one outgoing link variable equal
    to the parity of its inputs. A row of width ``w`` gives
    ``ceil((w-1)/(chunk_size-1))`` chunks. Returns ``(chunks, next_var)``
    where each chunk is ``(variables, rhs)``.
    """
    if chunk_size < 3:
        raise ValueError("chunk size must be at least 3")
    row = list(row)
    chunks = []
    while len(row) > chunk_size:
        link = next_var
        next_var += 1
        chunks.append((row[:chunk_size] + [link], 0))
        row = [link] + row[chunk_size:]
    chunks.append((row, rhs))
    return chunks, next_var


def chunked_formula(formula: CnfFormula, xors: XorSystem, chunk_size: int) -> CnfFormula:
    """Pure-CNF equivalent of ``F ∧ (A x = b)`` with link variables projected away."""
    clauses = list(formula.clauses)
    next_var = formula.num_vars + 1
    for row, b in zip(xors.rows, xors.rhs):
        if not row:
            if b:
                clauses += [(1,), (-1,)]
            continue
        chunks, next_var = chunk_xor(row, b, chunk_size, next_var)
        for variables, rhs in chunks:
            clauses += parity_clauses(variables, rhs)
    projection = formula.projection or frozenset(range(1, formula.num_vars + 1))
    return CnfFormula(next_var - 1, tuple(clauses), frozenset(projection))


def encode_query(
    formula: CnfFormula, xors: XorSystem, mode: str = "native", chunk_size: int = 3
) -> str:
    if mode == "native":
        return emit_dimacs(formula, xors)
    if mode == "chunked":
        return emit_dimacs(chunked_formula(formula, xors, chunk_size))
    raise ValueError(f"unknown xor encoding {mode!r}")


# --- external solver ------------------------------------------------------

@dataclass
class Transcript:
    solutions: list[frozenset[int]] = field(default_factory=list)
    complete: bool = False
    status_lines: int = 0


class CryptoMiniSatProtocol:
    """``cryptominisat5 --maxsol=K`` transcripts.

    Each solution is announced by ``s SATISFIABLE`` followed by ``v`` lines
    ending in ``0``; a final ``s UNSATISFIABLE`` means the enumeration was
    exhausted.
    """

    name = "cryptominisat5"

    def command(self, solver: list[str], cap: int, path: str) -> list[str]:
        return [*solver, f"--maxsol={cap}", "--verb=0", path]

    def parse(self, text: str) -> Transcript:
        out = Transcript()
        current: list[int] | None = None
        for raw in text.splitlines():
            tokens = raw.split()
            if not tokens:
                continue
            if tokens[0] == "s":
                out.status_lines += 1
                status = " ".join(tokens[1:])
                if status == "SATISFIABLE":
                    current = []
                elif status == "UNSATISFIABLE":
                    out.complete = True
                    current = None
                elif status == "INDETERMINATE":
                    current = None
                else:
                    raise OracleError(f"unrecognised solver status {status!r}")
            elif tokens[0] == "v" and current is not None:
                try:
                    lits = [int(t) for t in tokens[1:]]
                except ValueError:
                    raise OracleError(f"unparseable value line {raw!r}") from None
                if 0 in lits:
                    current += lits[:lits.index(0)]
                    out.solutions.append(frozenset(l for l in current if l > 0))
                    current = None
                else:
                    current += lits
        return out


def solver_command(spec: str | Sequence[str] | None = None) -> list[str]:
    if spec is None:
        spec = os.environ.get(SOLVER_ENV, DEFAULT_SOLVER)
    if isinstance(spec, str):
        return shlex.split(spec)
    return list(spec)


def interpret_transcript(
    transcript: Transcript, cap: int, counted: Sequence[int], timed_out: bool
) -> BoundedCountResult:
    """Map a parsed transcript to a bounded-count result.

    Solutions are compared on the counted variables only; if the solver hit
    its solution limit but fewer than ``cap`` of them are distinct after
    projection, the answer is reported as a lower bound (``timed_out``).
    """
    counted_set = set(counted)
    distinct = {sol & counted_set for sol in transcript.solutions}
    found = len(distinct)
    if found >= cap:
        return BoundedCountResult.saturated(cap)
    if timed_out:
        return BoundedCountResult.timed_out(found)
    if transcript.complete:
        return BoundedCountResult.exact(found)
    if len(transcript.solutions) >= cap:
        return BoundedCountResult.timed_out(found)
    raise OracleError("solver stopped before exhausting solutions or reaching the cap")


def run_external(
    query: str,
    budget: OracleBudget,
    solver: str | Sequence[str] | None = None,
    counted: Sequence[int] | None = None,
    protocol: CryptoMiniSatProtocol | None = None,
) -> BoundedCountResult:
    """Run the solver once on ``query`` (DIMACS text)."""
    protocol = protocol or CryptoMiniSatProtocol()
    cmd_base = solver_command(solver)
    if counted is None:
        from .formula import parse_dimacs

        counted = parse_dimacs(query).counted_vars
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(query)
        path = fh.name
    try:
        cmd = protocol.command(cmd_base, budget.cap, path)
        log.debug("running %s", " ".join(cmd))
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=budget.wall_clock
            )
        except FileNotFoundError:
            raise OracleError(f"solver executable not found: {cmd_base[0]!r}") from None
        except subprocess.TimeoutExpired as exc:
            out = exc.stdout or ""
            if isinstance(out, bytes):
                out = out.decode(errors="replace")
            try:
                transcript = protocol.parse(out)
            except OracleError:
                return BoundedCountResult.timed_out(0)
            return interpret_transcript(transcript, budget.cap, counted, timed_out=True)
    finally:
        os.unlink(path)

    transcript = protocol.parse(proc.stdout)
    if transcript.status_lines == 0:
        raise OracleError(
            f"solver exited with code {proc.returncode} without a parseable answer: "
            f"{proc.stderr.strip()[:200]}"
        )
    return interpret_transcript(transcript, budget.cap, counted, timed_out=False)


class ExternalBackend(OracleBackend):
    """Runs an external solver once per query (no process reuse)."""

    def __init__(
        self,
        solver: str | Sequence[str] | None = None,
        encoding: str = "native",
        chunk_size: int = 3,
        timeout: float | None = None,
        protocol: CryptoMiniSatProtocol | None = None,
    ):
        if encoding == "chunked" and chunk_size < 3:
            raise ValueError("chunk size must be at least 3")
        self.solver = solver_command(solver)
        self.encoding = encoding
        self.chunk_size = chunk_size
        self.timeout = timeout
        self.protocol = protocol or CryptoMiniSatProtocol()

    def count(self, formula, xors, budget):
        if budget.wall_clock is None and self.timeout is not None:
            budget = OracleBudget(budget.cap, self.timeout)
        query = encode_query(formula, xors, self.encoding, self.chunk_size)
        return run_external(query, budget, self.solver, formula.counted_vars, self.protocol)
