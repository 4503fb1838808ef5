"""Random systems of parity constraints ``A x = b`` over GF(2).

Variables are 1-indexed, matching DIMACS. Each row is stored as a sorted
tuple of variable indices; the equivalent bitmask (bit ``v-1`` set for
variable ``v``) is cached for fast evaluation.

Four families are supported, all i-uniform because the right-hand side is
uniform:

* ``dense``   -- every (row, variable) entry is 1 with probability 1/2
* ``sparse``  -- every entry is 1 with probability ``p``
* ``subcube`` -- ``i`` distinct variables are frozen to random values
* ``ldpc``    -- bi-regular: each column has exactly ``l`` ones and row
  degrees are ``floor(l*n/i)`` or ``ceil(l*n/i)``
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KINDS = ("dense", "sparse", "subcube", "ldpc")
LDPC_MAX_RETRIES = 100


class InfeasibleError(ValueError):
    """Raised when a family cannot produce a system with the requested shape."""


class XorSystem:
    """Immutable parity system; equality and hashing go through the bitmasks."""

    __slots__ = ("num_vars", "masks", "rhs", "_rows")

    def __init__(self, num_vars: int, rows: Sequence[Sequence[int]], rhs: Sequence[int]):
        if num_vars < 1:
            raise ValueError("num_vars must be positive")
        rows = tuple(tuple(int(v) for v in row) for row in rows)
        rhs = tuple(int(b) for b in rhs)
        if len(rows) != len(rhs):
            raise ValueError("rows and rhs differ in length")
        for row in rows:
            if len(set(row)) != len(row):
                raise ValueError(f"repeated variable in row {row}")
            for v in row:
                if not 1 <= v <= num_vars:
                    raise ValueError(f"variable {v} outside [1, {num_vars}]")
        if any(bit not in (0, 1) for bit in rhs):
            raise ValueError("rhs must be a bit vector")
        self._init(num_vars, tuple(sum(1 << (v - 1) for v in row) for row in rows), rhs)
        object.__setattr__(self, "_rows", tuple(tuple(sorted(row)) for row in rows))

    def _init(self, num_vars, masks, rhs):
        object.__setattr__(self, "num_vars", num_vars)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "_rows", None)

    def __setattr__(self, name, value):
        raise AttributeError("XorSystem is immutable")

    @classmethod
    def from_masks(cls, num_vars: int, masks: Sequence[int], rhs: Sequence[int]) -> "XorSystem":
        masks = tuple(int(m) for m in masks)
        rhs = tuple(int(b) for b in rhs)
        if len(masks) != len(rhs):
            raise ValueError("masks and rhs differ in length")
        limit = 1 << num_vars
        if any(not 0 <= m < limit for m in masks) or any(b not in (0, 1) for b in rhs):
            raise ValueError("mask or rhs out of range")
        system = cls.__new__(cls)
        system._init(num_vars, masks, rhs)
        return system

    @classmethod
    def empty(cls, num_vars: int) -> "XorSystem":
        return cls.from_masks(num_vars, (), ())

    @classmethod
    def from_matrix(cls, matrix, rhs) -> "XorSystem":
        matrix = np.asarray(matrix, dtype=np.uint8)
        rows = tuple(tuple(int(v) + 1 for v in np.flatnonzero(r)) for r in matrix)
        return cls(matrix.shape[1], rows, rhs)

    @property
    def rows(self) -> tuple[tuple[int, ...], ...]:
        if self._rows is None:
            object.__setattr__(self, "_rows", tuple(_mask_to_row(m) for m in self.masks))
        return self._rows

    def __eq__(self, other):
        if not isinstance(other, XorSystem):
            return NotImplemented
        return (self.num_vars, self.masks, self.rhs) == (other.num_vars, other.masks, other.rhs)

    def __hash__(self):
        return hash((self.num_vars, self.masks, self.rhs))

    def __repr__(self):
        return f"XorSystem(num_vars={self.num_vars}, rows={self.rows}, rhs={self.rhs})"

    @property
    def num_rows(self) -> int:
        return len(self.masks)

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.num_rows, self.num_vars), dtype=np.uint8)
        for k, row in enumerate(self.rows):
            out[k, [v - 1 for v in row]] = 1
        return out

    def prefix(self, i: int) -> "XorSystem":
        if not 0 <= i <= self.num_rows:
            raise ValueError(f"prefix length {i} outside [0, {self.num_rows}]")
        return XorSystem.from_masks(self.num_vars, self.masks[:i], self.rhs[:i])

    def relabel(self, variables: Sequence[int], num_vars: int) -> "XorSystem":
        """Map local variable ``k`` (1-based) to ``variables[k-1]``."""
        rows = tuple(tuple(sorted(variables[v - 1] for v in row)) for row in self.rows)
        return XorSystem(num_vars, rows, self.rhs)

    def row_degrees(self) -> list[int]:
        return [bin(m).count("1") for m in self.masks]

    def column_degrees(self) -> list[int]:
        counts = Counter(v for row in self.rows for v in row)
        return [counts.get(v, 0) for v in range(1, self.num_vars + 1)]

    def satisfied_by_int(self, sigma: int) -> bool:
        """Membership test with the assignment packed as an int (bit v-1 is x_v)."""
        for mask, b in zip(self.masks, self.rhs):
            if (bin(sigma & mask).count("1") & 1) != b:
                return False
        return True


def _mask_to_row(mask: int) -> tuple[int, ...]:
    row = []
    v = 1
    while mask:
        if mask & 1:
            row.append(v)
        mask >>= 1
        v += 1
    return tuple(row)


def member_check(system: XorSystem, assignment: Sequence[int]) -> bool:
    """True iff ``assignment`` (a 0/1 vector of length n) satisfies every row."""
    if len(assignment) != system.num_vars:
        raise ValueError(
            f"assignment has length {len(assignment)}, system has {system.num_vars} variables"
        )
    sigma = 0
    for k, bit in enumerate(assignment):
        if bit:
            sigma |= 1 << k
    return system.satisfied_by_int(sigma)


@dataclass(frozen=True)
class FamilySpec:
    """Which random family to draw parity constraints from.

    ``column_degree`` is only used by ``ldpc``; values below 3 need
    ``unsafe=True``. ``simple=False`` switches ``ldpc`` to the configuration
    ensemble: sockets are permuted without rejection and a variable landing
    twice in one row cancels (entry = multiplicity mod 2). This is the
    ensemble the weight enumerator in :mod:`ldpcount.boost` describes.
    """

    kind: str = "dense"
    sparse_prob: float | None = None
    column_degree: int = 3
    unsafe: bool = False
    simple: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {KINDS}")
        if self.kind == "sparse":
            if self.sparse_prob is None or not 0 < self.sparse_prob <= 0.5:
                raise ValueError("sparse family needs 0 < p <= 1/2")
        if self.kind == "ldpc" and self.column_degree < 3 and not self.unsafe:
            raise ValueError("ldpc needs column degree >= 3 (set unsafe=True to override)")
        if self.column_degree < 1:
            raise ValueError("column degree must be positive")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "sparse":
            out["p"] = self.sparse_prob
        if self.kind == "ldpc":
            out["l"] = self.column_degree
            out["simple"] = self.simple
        return out


def sample_system(family: FamilySpec, n: int, i: int, rng: np.random.Generator) -> XorSystem:
    """Draw an ``i``-row system over ``n`` variables from ``family``."""
    if n < 1:
        raise ValueError("n must be positive")
    if i < 0:
        raise ValueError("number of rows must be non-negative")
    if i > n and family.kind in ("subcube", "ldpc"):
        raise InfeasibleError(f"{family.kind} needs i <= n (got i={i}, n={n})")
    if i == 0:
        return XorSystem.empty(n)

    if family.kind == "dense":
        if n <= 61:
            # low n bits are the row, bit n is its rhs
            draws = rng.integers(0, 1 << (n + 1), size=i, dtype=np.int64).tolist()
            return XorSystem.from_masks(n, [d & ((1 << n) - 1) for d in draws], [d >> n for d in draws])
        matrix = rng.integers(0, 2, size=(i, n), dtype=np.uint8)
        return XorSystem.from_matrix(matrix, rng.integers(0, 2, size=i))

    if family.kind == "sparse":
        matrix = (rng.random((i, n)) < family.sparse_prob).astype(np.uint8)
        return XorSystem.from_matrix(matrix, rng.integers(0, 2, size=i))

    if family.kind == "subcube":
        frozen = rng.choice(n, size=i, replace=False)
        rhs = rng.integers(0, 2, size=i)
        return XorSystem(n, tuple((int(v) + 1,) for v in frozen), tuple(int(b) for b in rhs))

    rows = sample_ldpc_rows(n, i, family.column_degree, rng, simple=family.simple)
    rhs = rng.integers(0, 2, size=i)
    return XorSystem(n, rows, tuple(int(b) for b in rhs))


def ldpc_row_degrees(n: int, i: int, l: int) -> list[int]:
    """Row degrees before shuffling: the ``l*n mod i`` larger rows come first."""
    q, rem = divmod(l * n, i)
    return [q + 1] * rem + [q] * (i - rem)


def sample_ldpc_rows(
    n: int,
    i: int,
    l: int,
    rng: np.random.Generator,
    simple: bool = True,
    max_retries: int = LDPC_MAX_RETRIES,
) -> tuple[tuple[int, ...], ...]:
    """Bi-regular rows via a uniform permutation of the ``l*n`` sockets."""
    if i < 1 or i > n:
        raise InfeasibleError(f"ldpc needs 1 <= i <= n (got i={i}, n={n})")
    if l > i:
        raise InfeasibleError(f"column degree {l} exceeds the number of rows {i}")
    degrees = ldpc_row_degrees(n, i, l)
    if degrees[0] > n:
        raise InfeasibleError(f"row degree {degrees[0]} exceeds n={n}")

    perm = rng.permutation(np.repeat(np.arange(n), l))
    cuts = np.cumsum([0] + degrees)
    rows = [perm[cuts[k]:cuts[k + 1]].tolist() for k in range(i)]

    if not simple:
        out = []
        for row in rows:
            odd = sorted(v + 1 for v, c in Counter(row).items() if c % 2)
            out.append(tuple(odd))
        order = rng.permutation(i)
        return tuple(out[k] for k in order)

    for _ in range(max_retries):
        bad = [k for k, row in enumerate(rows) if len(set(row)) < len(row)]
        if not bad:
            break
        pool = rng.permutation(np.concatenate([rows[k] for k in bad])).tolist()
        pos = 0
        for k in bad:
            d = len(rows[k])
            rows[k] = pool[pos:pos + d]
            pos += d
    else:
        _repair_by_swaps(rows, n, rng)

    order = rng.permutation(i)
    return tuple(tuple(sorted(v + 1 for v in rows[k])) for k in order)


def _repair_by_swaps(rows: list[list[int]], n: int, rng: np.random.Generator) -> None:
    # Each swap lowers the total number of repeated sockets by at least one.
    counts = [Counter(row) for row in rows]
    while True:
        bad = [k for k, c in enumerate(counts) if any(m > 1 for m in c.values())]
        if not bad:
            return
        k = bad[int(rng.integers(len(bad)))]
        v = min(x for x, m in counts[k].items() if m > 1)
        missing = [u for u in range(n) if counts[k][u] == 0]
        options = []
        for u in missing:
            for k2, c2 in enumerate(counts):
                if k2 == k or c2[u] == 0:
                    continue
                if c2[v] == 0 or c2[u] > 1:
                    options.append((u, k2))
        if not options:
            raise InfeasibleError("socket repair failed")
        u, k2 = options[int(rng.integers(len(options)))]
        rows[k][rows[k].index(v)] = u
        rows[k2][rows[k2].index(u)] = v
        counts[k][v] -= 1
        counts[k][u] += 1
        counts[k2][u] -= 1
        counts[k2][v] += 1


@dataclass(frozen=True)
class NestedSystem:
    """``n`` rows sampled once; ``prefix(i)`` is the level-``i`` system.

    Solution sets shrink monotonically with ``i`` because every prefix keeps
    the rows of the shorter ones.
    """

    full: XorSystem
    family: FamilySpec
    heuristic: bool = False
    num_vars: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "num_vars", self.full.num_vars)

    def prefix(self, i: int) -> XorSystem:
        return self.full.prefix(i)


def sample_nested(
    family: FamilySpec, n: int, rng: np.random.Generator, heuristic: bool = False
) -> NestedSystem:
    """Sample a nested chain of systems for levels ``0..n``.

    Only the dense family gives a chain whose every prefix is distributed as
    the level's i-uniform family with independent refinements. Other families
    require ``heuristic=True`` and the result is marked accordingly.
    """
    if family.kind != "dense" and not heuristic:
        raise ValueError(
            f"nested sampling of the {family.kind} family is not rigorous; "
            "pass heuristic=True to use it anyway"
        )
    if family.kind == "subcube":
        order = rng.permutation(n)
        rhs = rng.integers(0, 2, size=n)
        full = XorSystem(n, tuple((int(v) + 1,) for v in order), tuple(int(b) for b in rhs))
    else:
        full = sample_system(family, n, n, rng)
    return NestedSystem(full, family, heuristic=family.kind != "dense")
