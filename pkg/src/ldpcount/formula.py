"""CNF formulas and the DIMACS text format.

Recognised lines:

* ``p cnf <vars> <clauses>`` header (clause count includes ``x`` lines)
* ``c ind v1 v2 ... 0`` sampling-set declaration; several lines are unioned
* ``x v1 v2 ... 0`` parity constraint; all-positive literals mean rhs 1,
  negating one literal flips the rhs
* clauses, terminated by ``0``, which may span several lines
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .xorsys import XorSystem


class DimacsError(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    projection: frozenset[int] | None = None

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        for clause in self.clauses:
            if not clause:
                raise ValueError("empty clause")
            seen = set(clause)
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} outside [1, {self.num_vars}]")
                if -lit in seen:
                    raise ValueError(f"tautological clause {clause}")
        if self.projection is not None:
            if not self.projection:
                raise ValueError("projection set must be nonempty")
            if any(not 1 <= v <= self.num_vars for v in self.projection):
                raise ValueError("projection variable out of range")

    @classmethod
    def build(cls, num_vars: int, clauses, projection=None) -> "CnfFormula":
        """Convenience constructor from any iterables; drops repeated literals."""
        norm = tuple(tuple(dict.fromkeys(int(l) for l in c)) for c in clauses)
        proj = frozenset(int(v) for v in projection) if projection is not None else None
        return cls(num_vars, norm, proj)

    @property
    def counted_vars(self) -> tuple[int, ...]:
        """Variables whose assignments are counted (projection, or all)."""
        if self.projection is None:
            return tuple(range(1, self.num_vars + 1))
        return tuple(sorted(self.projection))

    def satisfied_by(self, assignment: Sequence[int]) -> bool:
        """``assignment[k]`` is the value of variable ``k+1``."""
        if len(assignment) != self.num_vars:
            raise ValueError("assignment length does not match num_vars")
        for clause in self.clauses:
            if not any((assignment[abs(l) - 1] == 1) == (l > 0) for l in clause):
                return False
        return True


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise DimacsError(f"line {lineno}: non-integer token in {' '.join(tokens)!r}") from None


def parse_dimacs_with_xors(text: str) -> tuple[CnfFormula, XorSystem]:
    """Parse a DIMACS document that may contain ``x`` lines."""
    header = None
    clauses: list[tuple[int, ...]] = []
    xor_rows: list[tuple[int, ...]] = []
    xor_rhs: list[int] = []
    projection: set[int] | None = None
    pending: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "c":
            if len(tokens) > 1 and tokens[1] == "ind":
                vals = _ints(tokens[2:], lineno)
                if not vals or vals[-1] != 0:
                    raise DimacsError(f"line {lineno}: 'c ind' line not terminated by 0")
                projection = (projection or set()) | set(vals[:-1])
            continue
        if head == "p":
            if len(tokens) != 4 or tokens[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {raw.strip()!r}")
            nv, nc = _ints(tokens[2:], lineno)
            if nv < 1 or nc < 0:
                raise DimacsError(f"line {lineno}: bad header counts")
            if header is not None and header != (nv, nc):
                raise DimacsError(f"line {lineno}: contradictory duplicate header")
            header = (nv, nc)
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: data before 'p cnf' header")
        if head == "x" or head.startswith("x"):
            if pending:
                raise DimacsError(f"line {lineno}: xor line inside an unterminated clause")
            body = tokens[1:] if head == "x" else [head[1:]] + tokens[1:]
            vals = _ints(body, lineno)
            if not vals or vals[-1] != 0 or 0 in vals[:-1]:
                raise DimacsError(f"line {lineno}: xor line not terminated by a single 0")
            lits = vals[:-1]
            if not lits:
                raise DimacsError(f"line {lineno}: empty xor line")
            rhs = 1
            for lit in lits:
                if lit < 0:
                    rhs ^= 1
            xor_rows.append(tuple(sorted(abs(l) for l in lits)))
            xor_rhs.append(rhs)
            continue
        for val in _ints(tokens, lineno):
            if val == 0:
                if not pending:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(tuple(dict.fromkeys(pending)))
                pending = []
            else:
                pending.append(val)

    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if pending:
        raise DimacsError("last clause not terminated by 0")
    nv, nc = header
    if len(clauses) + len(xor_rows) != nc:
        raise DimacsError(
            f"header declares {nc} clauses, found {len(clauses)} clauses and {len(xor_rows)} xors"
        )
    for clause in clauses:
        for lit in clause:
            if abs(lit) > nv:
                raise DimacsError(f"literal {lit} exceeds declared {nv} variables")
    for row in xor_rows:
        if row and row[-1] > nv:
            raise DimacsError(f"xor variable {row[-1]} exceeds declared {nv} variables")
    if projection is not None and any(not 1 <= v <= nv for v in projection):
        raise DimacsError("projection variable out of range")
    try:
        formula = CnfFormula(nv, tuple(clauses), frozenset(projection) if projection else None)
        xors = XorSystem(nv, tuple(xor_rows), tuple(xor_rhs))
    except ValueError as exc:
        raise DimacsError(str(exc)) from None
    return formula, xors


def parse_dimacs(text: str) -> CnfFormula:
    """Parse a DIMACS document; ``x`` lines, if any, are validated and dropped."""
    return parse_dimacs_with_xors(text)[0]


def xor_line(row: Sequence[int], rhs: int) -> str:
    lits = list(row)
    if rhs == 0:
        lits[0] = -lits[0]
    return "x " + " ".join(str(l) for l in lits) + " 0"


def emit_dimacs(formula: CnfFormula, xors: XorSystem | None = None) -> str:
    """Render ``formula`` (and optional parity rows) as DIMACS text.

    Empty parity rows are not expressible as ``x`` lines: with rhs 0 they are
    dropped, with rhs 1 they become the contradictory pair ``1 0`` / ``-1 0``.
    """
    extra_clauses: list[tuple[int, ...]] = []
    xor_lines: list[str] = []
    if xors is not None:
        if xors.num_vars > formula.num_vars:
            raise ValueError("xor system references variables above num_vars")
        for row, b in zip(xors.rows, xors.rhs):
            if row:
                xor_lines.append(xor_line(row, b))
            elif b:
                extra_clauses += [(1,), (-1,)]
    clauses = list(formula.clauses) + extra_clauses
    lines = [f"p cnf {formula.num_vars} {len(clauses) + len(xor_lines)}"]
    if formula.projection is not None:
        lines.append("c ind " + " ".join(str(v) for v in sorted(formula.projection)) + " 0")
    lines += [" ".join(str(l) for l in c) + " 0" for c in clauses]
    lines += xor_lines
    return "\n".join(lines) + "\n"
