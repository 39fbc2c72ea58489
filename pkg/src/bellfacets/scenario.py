"""Bell-scenario combinatorics.

Conventions
-----------
Everything is zero-based internally. A table over a scenario ``(mA, mB, kA, kB)``
is stored flat with

    index(a, b, x, y) = ((x * mB + y) * kA + a) * kB + b

which is row-major over ``x, y, a, b``. The matrix form used for printing puts
``(x, a)`` on the rows and ``(y, b)`` on the columns.

Deterministic vertices are enumerated lexicographically in the assignment
``(a_1..a_mA, b_1..b_mB)`` with ``a_1`` the most significant digit, so the vertex
values of an inequality reshape (C order) into a tensor with one axis per
measurement, Alice's axes first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from ._rational import as_fraction
from .errors import InvalidScenario, NonBinaryScenario, ShapeMismatch

FLOAT_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Scenario:
    mA: int
    mB: int
    kA: int
    kB: int

    def __post_init__(self):
        for name in ("mA", "mB"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise InvalidScenario(f"{name} must be a positive integer")
        for name in ("kA", "kB"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 2:
                raise InvalidScenario(f"{name} must be an integer >= 2")

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        try:
            parts = [int(p) for p in text.replace(" ", "").strip("()").split(",")]
        except ValueError as exc:
            raise InvalidScenario(f"cannot parse scenario {text!r}") from exc
        if len(parts) != 4:
            raise InvalidScenario(f"scenario needs four integers, got {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"({self.mA},{self.mB},{self.kA},{self.kB})"

    @property
    def n_entries(self) -> int:
        return self.mA * self.mB * self.kA * self.kB

    @property
    def n_vertices(self) -> int:
        return self.kA ** self.mA * self.kB ** self.mB

    @property
    def dimension(self) -> int:
        return dimension(self)

    @property
    def is_square(self) -> bool:
        return self.mA == self.mB and self.kA == self.kB

    @property
    def is_binary(self) -> bool:
        return self.kA == 2 and self.kB == 2

    @property
    def group_order(self) -> int:
        order = (math.factorial(self.kA) ** self.mA * math.factorial(self.kB) ** self.mB
                 * math.factorial(self.mA) * math.factorial(self.mB))
        return 2 * order if self.is_square else order

    def index(self, a: int, b: int, x: int, y: int) -> int:
        return ((x * self.mB + y) * self.kA + a) * self.kB + b

    def unindex(self, i: int) -> tuple[int, int, int, int]:
        i, b = divmod(i, self.kB)
        i, a = divmod(i, self.kA)
        x, y = divmod(i, self.mB)
        return a, b, x, y

    def extended(self) -> "Scenario":
        """The scenario with one extra outcome per measurement (the no-click outcome)."""
        return Scenario(self.mA, self.mB, self.kA + 1, self.kB + 1)

    def swapped(self) -> "Scenario":
        return Scenario(self.mB, self.mA, self.kB, self.kA)


def dimension(s: Scenario) -> int:
    t = s.mA * s.mB * (s.kA - 1) * (s.kB - 1) + s.mA * (s.kA - 1) + s.mB * (s.kB - 1)
    assert t == (s.mA * (s.kA - 1) + 1) * (s.mB * (s.kB - 1) + 1) - 1
    return t


# ---------------------------------------------------------------------------
# tables


class _Table:
    """Shared storage for anything indexed by ``(a, b, x, y)``."""

    __slots__ = ("scenario", "entries")

    def __init__(self, scenario: Scenario, entries):
        entries = tuple(entries)
        if len(entries) != scenario.n_entries:
            raise ShapeMismatch(
                f"{scenario} needs {scenario.n_entries} entries, got {len(entries)}")
        self.scenario = scenario
        self.entries = entries

    @classmethod
    def from_table(cls, scenario: Scenario, rows, **kw):
        """Build from the matrix form: rows ``(x, a)``, columns ``(y, b)``."""
        s = scenario
        rows = [list(r) for r in rows]
        if len(rows) != s.mA * s.kA or any(len(r) != s.mB * s.kB for r in rows):
            raise ShapeMismatch(f"table for {s} must be {s.mA * s.kA}x{s.mB * s.kB}")
        entries = [None] * s.n_entries
        for x in range(s.mA):
            for a in range(s.kA):
                for y in range(s.mB):
                    for b in range(s.kB):
                        entries[s.index(a, b, x, y)] = rows[x * s.kA + a][y * s.kB + b]
        return cls(s, _coerce(entries), **kw)

    def as_table(self) -> list[list]:
        s = self.scenario
        out = [[None] * (s.mB * s.kB) for _ in range(s.mA * s.kA)]
        for i, v in enumerate(self.entries):
            a, b, x, y = s.unindex(i)
            out[x * s.kA + a][y * s.kB + b] = v
        return out

    def __getitem__(self, key):
        if isinstance(key, tuple):
            a, b, x, y = key
            return self.entries[self.scenario.index(a, b, x, y)]
        return self.entries[key]

    def block(self, x: int, y: int) -> list[list]:
        s = self.scenario
        return [[self[a, b, x, y] for b in range(s.kB)] for a in range(s.kA)]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.entries)

    def to_numpy(self) -> np.ndarray:
        return np.array([float(v) for v in self.entries])

    def __eq__(self, other):
        return (type(self) is type(other) and self.scenario == other.scenario
                and self.entries == other.entries)

    def __hash__(self):
        return hash((type(self).__name__, self.scenario, self.entries))


def _coerce(entries):
    if all(isinstance(v, float) for v in entries):
        return [float(v) for v in entries]
    return [as_fraction(v) for v in entries]


class Distribution(_Table):
    """Conditional probability table ``p(ab|xy)``."""

    __slots__ = ()

    def __init__(self, scenario: Scenario, entries):
        super().__init__(scenario, _coerce(list(entries)))

    def __repr__(self):
        return f"Distribution({self.scenario}, {[str(v) for v in self.entries]})"

    def marginal_a(self, a: int, x: int, y: int = 0):
        return sum(self[a, b, x, y] for b in range(self.scenario.kB))

    def marginal_b(self, b: int, y: int, x: int = 0):
        return sum(self[a, b, x, y] for a in range(self.scenario.kA))

    def mix(self, other: "Distribution", weight) -> "Distribution":
        """``weight * self + (1 - weight) * other``."""
        if other.scenario != self.scenario:
            raise ShapeMismatch("cannot mix distributions of different scenarios")
        w = as_fraction(weight) if self.is_exact and other.is_exact else float(weight)
        return Distribution(self.scenario,
                            [w * p + (1 - w) * q for p, q in zip(self.entries, other.entries)])

    def is_normalized(self) -> bool:
        s = self.scenario
        for x in range(s.mA):
            for y in range(s.mB):
                tot = sum(self[a, b, x, y] for a in range(s.kA) for b in range(s.kB))
                if not _close(tot, 1):
                    return False
        return True


class BellInequality(_Table):
    """Coefficient table ``B(ab|xy)`` with the convention ``B . p >= bound`` on the local polytope."""

    __slots__ = ("bound",)

    def __init__(self, scenario: Scenario, entries, bound=1):
        super().__init__(scenario, [as_fraction(v) for v in entries])
        self.bound = as_fraction(bound)

    def __repr__(self):
        return f"BellInequality({self.scenario}, bound={self.bound})"

    def __eq__(self, other):
        return super().__eq__(other) and self.bound == other.bound

    def __hash__(self):
        return hash((self.scenario, self.entries, self.bound))

    def evaluate(self, d: Distribution):
        if d.scenario != self.scenario:
            raise ShapeMismatch("inequality and distribution live in different scenarios")
        return sum(c * p for c, p in zip(self.entries, d.entries))

    def scaled(self, k, shift=0) -> "BellInequality":
        """Representation ``k * B + shift * (uniform functional)`` of the same hyperplane.

        ``shift`` is spread evenly over all ``(x, y)`` blocks so the value at every
        normalized distribution moves by exactly ``shift``.
        """
        s = self.scenario
        k, shift = as_fraction(k), as_fraction(shift)
        per = shift / (s.mA * s.mB)
        return BellInequality(s, [k * c + per for c in self.entries], k * self.bound + shift)


def _close(u, v) -> bool:
    if isinstance(u, float) or isinstance(v, float):
        return abs(float(u) - float(v)) <= FLOAT_TOL
    return u == v


# ---------------------------------------------------------------------------
# deterministic vertices


@dataclass(frozen=True)
class DeterministicVertex:
    scenario: Scenario
    a: tuple
    b: tuple

    def __post_init__(self):
        s = self.scenario
        if len(self.a) != s.mA or len(self.b) != s.mB:
            raise ShapeMismatch("assignment length does not match the scenario")
        if any(not 0 <= v < s.kA for v in self.a) or any(not 0 <= v < s.kB for v in self.b):
            raise ShapeMismatch("assignment outcome out of range")

    @property
    def position(self) -> int:
        """Position in :func:`enumerate_deterministic` order."""
        s = self.scenario
        i = 0
        for v in self.a:
            i = i * s.kA + v
        for v in self.b:
            i = i * s.kB + v
        return i

    def to_distribution(self) -> Distribution:
        s = self.scenario
        entries = [Fraction(0)] * s.n_entries
        for x in range(s.mA):
            for y in range(s.mB):
                entries[s.index(self.a[x], self.b[y], x, y)] = Fraction(1)
        return Distribution(s, entries)


def enumerate_deterministic(s: Scenario) -> list[DeterministicVertex]:
    ranges = [range(s.kA)] * s.mA + [range(s.kB)] * s.mB
    return [DeterministicVertex(s, tuple(v[:s.mA]), tuple(v[s.mA:]))
            for v in itertools.product(*ranges)]


@lru_cache(maxsize=None)
def vertex_digits(s: Scenario) -> np.ndarray:
    """``(n_vertices, mA + mB)`` array of outcome assignments, enumeration order."""
    ranges = [range(s.kA)] * s.mA + [range(s.kB)] * s.mB
    arr = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def vertex_support(s: Scenario) -> np.ndarray:
    """``(n_vertices, mA * mB)`` flat indices of the nonzero entry per ``(x, y)`` block."""
    dig = vertex_digits(s)
    cols = []
    for x in range(s.mA):
        for y in range(s.mB):
            a = dig[:, x]
            b = dig[:, s.mA + y]
            cols.append(((x * s.mB + y) * s.kA + a) * s.kB + b)
    arr = np.stack(cols, axis=1)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def vertex_matrix(s: Scenario) -> np.ndarray:
    """0/1 matrix ``A`` (entries x vertices) whose columns are the deterministic points."""
    sup = vertex_support(s)
    A = np.zeros((s.n_entries, s.n_vertices), dtype=np.int64)
    cols = np.repeat(np.arange(s.n_vertices), sup.shape[1])
    A[sup.ravel(), cols] = 1
    A.setflags(write=False)
    return A


# ---------------------------------------------------------------------------
# no-signalling


def is_no_signalling(d: Distribution) -> bool:
    s = d.scenario
    for x in range(s.mA):
        for a in range(s.kA):
            ref = d.marginal_a(a, x, 0)
            for y in range(1, s.mB):
                if not _close(d.marginal_a(a, x, y), ref):
                    return False
    for y in range(s.mB):
        for b in range(s.kB):
            ref = d.marginal_b(b, y, 0)
            for x in range(1, s.mA):
                if not _close(d.marginal_b(b, y, x), ref):
                    return False
    return True


@lru_cache(maxsize=None)
def equality_constraints(s: Scenario) -> np.ndarray:
    """Rows spanning normalization and no-signalling equalities (integer matrix)."""
    rows = []
    for x in range(s.mA):
        for y in range(s.mB):
            r = np.zeros(s.n_entries, dtype=np.int64)
            for a in range(s.kA):
                for b in range(s.kB):
                    r[s.index(a, b, x, y)] = 1
            rows.append(r)
    for x in range(s.mA):
        for a in range(s.kA):
            for y in range(1, s.mB):
                r = np.zeros(s.n_entries, dtype=np.int64)
                for b in range(s.kB):
                    r[s.index(a, b, x, y)] += 1
                    r[s.index(a, b, x, 0)] -= 1
                rows.append(r)
    for y in range(s.mB):
        for b in range(s.kB):
            for x in range(1, s.mA):
                r = np.zeros(s.n_entries, dtype=np.int64)
                for a in range(s.kA):
                    r[s.index(a, b, x, y)] += 1
                    r[s.index(a, b, 0, y)] -= 1
                rows.append(r)
    arr = np.array(rows, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def is_ns_extremal(d: Distribution) -> bool:
    """Zero-dimensional-face test: tight positivity rows pin ``d`` inside the NS subspace."""
    s = d.scenario
    zero = [i for i, v in enumerate(d.entries) if _close(v, 0)]
    eq = equality_constraints(s)
    tight = np.zeros((len(zero), s.n_entries), dtype=np.int64)
    tight[np.arange(len(zero)), zero] = 1
    M = np.vstack([eq, tight]) if zero else np.array(eq)
    return kernels.rank(M) == s.n_entries


# canonical 2x2 blocks for binary outcomes, rows a, columns b
_H = Fraction(1, 2)
_BLOCKS = {
    "S": ((_H, 0), (0, _H)),
    "A": ((0, _H), (_H, 0)),
    "K": ((_H, _H), (0, 0)),
    "L": ((_H, 0), (_H, 0)),
    "M": ((1, 0), (0, 0)),
}


def distribution_from_blocks(s: Scenario, pattern: Sequence[Sequence[str]]) -> Distribution:
    """Assemble a binary-outcome distribution from a grid of named 2x2 blocks."""
    if not s.is_binary:
        raise NonBinaryScenario("block patterns need kA = kB = 2")
    entries = [Fraction(0)] * s.n_entries
    for x in range(s.mA):
        for y in range(s.mB):
            blk = _BLOCKS[pattern[x][y]]
            for a in range(2):
                for b in range(2):
                    entries[s.index(a, b, x, y)] = Fraction(blk[a][b])
    return Distribution(s, entries)


def _canonical_patterns(s: Scenario, k_rows: int, l_cols: int) -> Iterator[list[list[str]]]:
    rows, cols = s.mA - k_rows, s.mB - l_cols
    free = [(x, y) for x in range(1, rows) for y in range(1, cols) if (x, y) != (1, 1)]
    for choice in itertools.product("SA", repeat=len(free)):
        grid = [["S"] * s.mB for _ in range(s.mA)]
        grid[1][1] = "A"
        for (x, y), c in zip(free, choice):
            grid[x][y] = c
        for x in range(s.mA):
            for y in range(s.mB):
                in_k, in_l = x >= rows, y >= cols
                if in_k and in_l:
                    grid[x][y] = "M"
                elif in_k:
                    grid[x][y] = "K"
                elif in_l:
                    grid[x][y] = "L"
        yield grid


def _require_binary(s: Scenario):
    if not s.is_binary:
        raise NonBinaryScenario(f"{s} does not have binary outcomes")
    if s.mA < 2 or s.mB < 2:
        raise NonBinaryScenario(f"{s} has no non-local no-signalling points")


def enumerate_ns_canonical(s: Scenario) -> list[Distribution]:
    """All canonical-form NS points, K/L/M blocks included, no extremality filter."""
    _require_binary(s)
    out = []
    for r in range(s.mA - 1):
        for c in range(s.mB - 1):
            out.extend(distribution_from_blocks(s, g) for g in _canonical_patterns(s, r, c))
    return out


def enumerate_ns_extremal_sa(s: Scenario) -> list[Distribution]:
    """Extremal canonical-form NS points built from S and A blocks only."""
    _require_binary(s)
    return [d for d in (distribution_from_blocks(s, g) for g in _canonical_patterns(s, 0, 0))
            if is_ns_extremal(d)]


def pr_box() -> Distribution:
    return distribution_from_blocks(Scenario(2, 2, 2, 2), [["S", "S"], ["S", "A"]])


def uniform_distribution(s: Scenario) -> Distribution:
    v = Fraction(1, s.kA * s.kB)
    return Distribution(s, [v] * s.n_entries)


# ---------------------------------------------------------------------------
# relabellings


def _inverse_perm(p: Sequence[int]) -> tuple:
    inv = [0] * len(p)
    for i, v in enumerate(p):
        inv[v] = i
    return tuple(inv)


@dataclass(frozen=True)
class Relabelling:
    """Party swap (applied first), then measurement and per-measurement outcome permutations.

    The local part sends Alice's ``(a, x)`` to ``(out_a[x][a], meas_a[x])`` and
    likewise for Bob; ``out_a`` is indexed by the measurement *before* it is moved.
    """

    meas_a: tuple
    meas_b: tuple
    out_a: tuple
    out_b: tuple
    swap: bool = False

    @classmethod
    def identity(cls, s: Scenario) -> "Relabelling":
        return cls(tuple(range(s.mA)), tuple(range(s.mB)),
                   tuple(tuple(range(s.kA)) for _ in range(s.mA)),
                   tuple(tuple(range(s.kB)) for _ in range(s.mB)))

    def check(self, s: Scenario):
        if self.swap and not s.is_square:
            raise ShapeMismatch(f"party swap needs a square scenario, got {s}")
        ok = (sorted(self.meas_a) == list(range(s.mA)) and sorted(self.meas_b) == list(range(s.mB))
              and len(self.out_a) == s.mA and len(self.out_b) == s.mB
              and all(sorted(p) == list(range(s.kA)) for p in self.out_a)
              and all(sorted(p) == list(range(s.kB)) for p in self.out_b))
        if not ok:
            raise ShapeMismatch(f"relabelling does not fit scenario {s}")

    def _conjugated(self) -> "Relabelling":
        return Relabelling(self.meas_b, self.meas_a, self.out_b, self.out_a, self.swap)

    def compose(self, first: "Relabelling") -> "Relabelling":
        """``self o first``: apply ``first`` then ``self``."""
        inner = first._conjugated() if self.swap else first
        m_a = tuple(self.meas_a[inner.meas_a[x]] for x in range(len(inner.meas_a)))
        m_b = tuple(self.meas_b[inner.meas_b[y]] for y in range(len(inner.meas_b)))
        o_a = tuple(tuple(self.out_a[inner.meas_a[x]][inner.out_a[x][a]]
                          for a in range(len(inner.out_a[x]))) for x in range(len(inner.meas_a)))
        o_b = tuple(tuple(self.out_b[inner.meas_b[y]][inner.out_b[y][b]]
                          for b in range(len(inner.out_b[y]))) for y in range(len(inner.meas_b)))
        return Relabelling(m_a, m_b, o_a, o_b, self.swap != first.swap)

    def __matmul__(self, first: "Relabelling") -> "Relabelling":
        return self.compose(first)

    def inverse(self) -> "Relabelling":
        mi_a, mi_b = _inverse_perm(self.meas_a), _inverse_perm(self.meas_b)
        local = Relabelling(
            mi_a, mi_b,
            tuple(_inverse_perm(self.out_a[mi_a[x]]) for x in range(len(mi_a))),
            tuple(_inverse_perm(self.out_b[mi_b[y]]) for y in range(len(mi_b))),
        )
        if self.swap:
            local = local._conjugated()
        return Relabelling(local.meas_a, local.meas_b, local.out_a, local.out_b, self.swap)

    def map_entry(self, s: Scenario, a: int, b: int, x: int, y: int) -> tuple:
        if self.swap:
            a, b, x, y = b, a, y, x
        return self.out_a[x][a], self.out_b[y][b], self.meas_a[x], self.meas_b[y]

    def index_permutation(self, s: Scenario) -> np.ndarray:
        """``P`` with ``P[i]`` the flat index that entry ``i`` is moved to."""
        self.check(s)
        P = np.empty(s.n_entries, dtype=np.int64)
        for i in range(s.n_entries):
            P[i] = s.index(*self.map_entry(s, *s.unindex(i)))
        return P

    def map_vertex(self, v: DeterministicVertex) -> DeterministicVertex:
        s = v.scenario
        self.check(s)
        a, b = (v.b, v.a) if self.swap else (v.a, v.b)
        new_a = [0] * s.mA
        new_b = [0] * s.mB
        for x, ax in enumerate(a):
            new_a[self.meas_a[x]] = self.out_a[x][ax]
        for y, by in enumerate(b):
            new_b[self.meas_b[y]] = self.out_b[y][by]
        return DeterministicVertex(s, tuple(new_a), tuple(new_b))

    def vertex_permutation(self, s: Scenario) -> np.ndarray:
        """``w`` with ``w[i]`` the enumeration position of the image of vertex ``i``."""
        return np.array([self.map_vertex(v).position for v in enumerate_deterministic(s)],
                        dtype=np.int64)


def apply_relabelling(r: Relabelling, obj):
    """Relabel a Distribution, BellInequality or DeterministicVertex."""
    if isinstance(obj, DeterministicVertex):
        return r.map_vertex(obj)
    s = obj.scenario
    P = r.index_permutation(s)
    new = [None] * s.n_entries
    for i, v in enumerate(obj.entries):
        new[P[i]] = v
    if isinstance(obj, BellInequality):
        return BellInequality(s, new, obj.bound)
    return Distribution(s, new)


class RelabellingGroup(Sequence):
    """Lazy, indexable list of every relabelling of a scenario (mixed-radix order)."""

    def __init__(self, s: Scenario):
        self.scenario = s
        self._perm_a = list(itertools.permutations(range(s.kA)))
        self._perm_b = list(itertools.permutations(range(s.kB)))
        self._meas_a = list(itertools.permutations(range(s.mA)))
        self._meas_b = list(itertools.permutations(range(s.mB)))
        self._radix = ([2] if s.is_square else []) + [len(self._meas_a), len(self._meas_b)] \
            + [len(self._perm_a)] * s.mA + [len(self._perm_b)] * s.mB

    def __len__(self):
        return math.prod(self._radix)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        digits = []
        for r in reversed(self._radix):
            i, d = divmod(i, r)
            digits.append(d)
        digits.reverse()
        s = self.scenario
        swap = False
        if s.is_square:
            swap = bool(digits.pop(0))
        ma, mb = self._meas_a[digits[0]], self._meas_b[digits[1]]
        oa = tuple(self._perm_a[d] for d in digits[2:2 + s.mA])
        ob = tuple(self._perm_b[d] for d in digits[2 + s.mA:])
        return Relabelling(ma, mb, oa, ob, swap)

    def __iter__(self):
        s = self.scenario
        swaps = (False, True) if s.is_square else (False,)
        for sw in swaps:
            for ma in self._meas_a:
                for mb in self._meas_b:
                    for oa in itertools.product(self._perm_a, repeat=s.mA):
                        for ob in itertools.product(self._perm_b, repeat=s.mB):
                            yield Relabelling(ma, mb, oa, ob, sw)


def relabelling_group(s: Scenario) -> RelabellingGroup:
    return RelabellingGroup(s)
