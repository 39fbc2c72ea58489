"""Exact-rational simplex for the local-weight linear program.

The primal is

    maximise  sum(x)   subject to   A x <= q,  x >= 0

with ``A`` the 0/1 matrix of deterministic points. Its dual

    minimise  q . y    subject to   A^T y >= 1,  y >= 0

is a Bell inequality with local bound 1 whenever the optimum is below 1. Since
``q >= 0`` the slack basis is primal feasible, so the simplex starts there
without a phase one; the optimal ``y`` is read off the slack columns of the
final objective row.

The tableau is kept as integers over a common positive denominator (the basis
determinant) and updated by fraction-free pivoting, so every intermediate value
is exact and canonical. The coefficient block stays small and lives in int64
(compiled kernel); the right-hand side, which carries the denominators of ``q``,
is kept in Python integers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from . import kernels
from ._rational import scale_to_integers
from .errors import Infeasible, Unbounded
from .scenario import BellInequality, Distribution, Scenario, vertex_matrix

log = logging.getLogger(__name__)

_LIMIT = 2 ** 62
_OPTIMAL, _UNBOUNDED, _OVERFLOW, _TRACE_FULL = 0, 1, 2, 3
BLAND, DANTZIG = "bland", "dantzig"
_RULES = {BLAND: 0, DANTZIG: 1}
_DEGENERATE_RUN = 50


@dataclass(frozen=True)
class LocalWeightProblem:
    q: Distribution

    @property
    def scenario(self) -> Scenario:
        return self.q.scenario

    @property
    def A(self) -> np.ndarray:
        return vertex_matrix(self.q.scenario)


@dataclass(frozen=True)
class LPSolution:
    primal_value: Fraction
    x: tuple
    y: tuple
    basis_trace: tuple = field(repr=False)
    _tableau: object = field(default=None, repr=False, compare=False)

    @property
    def pivots(self) -> int:
        return len(self.basis_trace)


@dataclass(frozen=True)
class LocalCertificate:
    """Convex decomposition of a local distribution into deterministic points."""

    scenario: Scenario
    weights: tuple

    def support(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w]


def _as_problem(p) -> LocalWeightProblem:
    return p if isinstance(p, LocalWeightProblem) else LocalWeightProblem(p)


class _Tableau:
    """Integer tableau ``M / D`` with its basis; the coefficient block does not depend on q."""

    __slots__ = ("M", "D", "basis", "n", "N")

    def __init__(self, M, D, basis, n, N):
        self.M, self.D, self.basis, self.n, self.N = M, D, basis, n, N

    @classmethod
    def slack_start(cls, A: np.ndarray) -> "_Tableau":
        N, n = A.shape
        M = np.zeros((N + 1, n + N), dtype=np.int64)
        M[:N, :n] = A
        M[np.arange(N), n + np.arange(N)] = 1
        M[N, :n] = -1
        return cls(M, 1, np.arange(n, n + N), n, N)

    def copy(self) -> "_Tableau":
        return _Tableau(self.M.copy(), self.D, self.basis.copy(), self.n, self.N)

    def rhs_for(self, Q: list) -> np.ndarray:
        """Right-hand side (times D) of the current basis for the scaled seed ``Q``."""
        if self.D == 1 and np.array_equal(self.basis, np.arange(self.n, self.n + self.N)):
            return np.array(list(Q) + [0], dtype=object)
        B = self.M[:, self.n:].astype(object)
        return B.dot(np.array(Q, dtype=object))

    def pivot(self, r: int, j: int, rhs: np.ndarray) -> np.ndarray:
        M = self.M
        piv = int(M[r, j])
        colfull = M[:, j].astype(object)
        if M.dtype == object:
            self.M = kernels.pivot_object(M, r, j, self.D)
        else:
            work = np.empty_like(M)
            try:
                kernels.pivot(M, work, r, j, self.D)
                self.M = work
            except OverflowError:
                log.debug("tableau left int64 range; continuing with Python integers")
                self.M = kernels.pivot_object(M.astype(object), r, j, self.D)
        pr = rhs[r]
        rhs = (rhs * piv - colfull * pr) // self.D
        rhs[r] = pr
        self.basis[r] = j
        self.D = piv
        return rhs

    def negate_row(self, r: int, rhs: np.ndarray):
        self.M[r] = -self.M[r]
        rhs[r] = -rhs[r]


def solve_local_weight(p: Union[LocalWeightProblem, Distribution], verbose: bool = False,
                       warm: "LPSolution | None" = None,
                       priority: "np.ndarray | None" = None, rule: str = BLAND,
                       guided: bool = False) -> LPSolution:
    """Optimal primal/dual pair of the local-weight program, exactly, by Bland's rule.

    Variables are ``x_0 .. x_{n-1}`` (vertex weights) followed by the slacks.
    Bland's rule picks the lowest-ranked eligible variable; ``priority[v]`` is
    the rank of variable ``v`` (default: its index). Any fixed ranking keeps the
    termination guarantee, and different rankings reach different optimal
    vertices of the degenerate dual.

    With ``warm`` the search restarts from that solution's optimal basis, which
    stays dual feasible for any seed; a dual simplex pass (again with Bland's
    rule) restores primal feasibility. Without it the slack basis is used.

    ``rule="dantzig"`` enters the most negative reduced cost instead, reverting
    to Bland's choice during runs of degenerate pivots so it still terminates.
    It takes far fewer pivots; the value is the same, the dual vertex may differ.

    ``guided=True`` first solves the program in floating point (HiGHS) and
    pivots the exact tableau onto the support of that solution; the exact
    simplex then finishes from there, so the result is still exact and
    certified optimal. Only worth it on large scenarios.
    """
    p = _as_problem(p)
    q = [Fraction(v) for v in p.q.entries]
    if any(v < 0 for v in q):
        raise Infeasible("objective seed has negative entries")
    Q, L = scale_to_integers(q)
    start = warm._tableau if warm is not None else None
    if guided and start is None:
        start = _guided_start(p.scenario, Q)
    tab, rhs, trace = solve_scaled(p.scenario, Q, priority, start, verbose, rule)

    n, N, D = tab.n, tab.N, tab.D
    value = Fraction(int(rhs[N]), D * L)
    y = tuple(Fraction(int(tab.M[N, n + i]), D) for i in range(N))
    x = [Fraction(0)] * n
    for row, var in enumerate(tab.basis):
        if var < n:
            x[var] = Fraction(int(rhs[row]), D * L)
    return LPSolution(value, tuple(x), y, tuple(trace), tab)


def solve_scaled(s: Scenario, Q: list, priority=None, start: "_Tableau | None" = None,
                 verbose: bool = False, rule: str = BLAND):
    """Simplex on the integer seed ``Q`` (any positive multiple of q).

    Returns the final tableau, its right-hand side and the pivot trace. The
    dual solution is ``tab.M[N, n:] / tab.D`` whatever the scaling of ``Q``.
    """
    if start is not None and start.N == len(Q):
        tab = start.copy()
    else:
        tab = _Tableau.slack_start(vertex_matrix(s))
    n, N = tab.n, tab.N
    rhs = tab.rhs_for(Q)
    if rule not in _RULES:
        raise ValueError(f"pivot rule must be one of {sorted(_RULES)}")
    rank = np.arange(n + N) if priority is None else np.asarray(priority)
    if rank.shape != (n + N,):
        raise ValueError("priority must rank every variable")
    trace = []

    def record(j, r):
        trace.append((j, int(tab.basis[r])))
        if verbose:
            log.info("pivot %d: enter %d leave %d", len(trace), j, tab.basis[r])

    # dual simplex: only reached from a warm start
    while True:
        bad = [i for i in range(N) if rhs[i] < 0]
        if not bad:
            break
        r = min(bad, key=lambda i: rank[tab.basis[i]])
        row = tab.M[r]
        cand = np.flatnonzero(row < 0)
        if cand.size == 0:
            raise Infeasible("no feasible local weight (corrupt input)")
        obj = tab.M[N]
        j = int(cand[0])
        for c in cand[1:]:
            c = int(c)
            # compare obj[c] / -row[c] with obj[j] / -row[j]
            lhs, rhs_j = int(obj[c]) * -int(row[j]), int(obj[j]) * -int(row[c])
            if lhs < rhs_j or (lhs == rhs_j and rank[c] < rank[j]):
                j = c
        record(j, r)
        tab.negate_row(r, rhs)
        rhs = tab.pivot(r, j, rhs)

    # primal simplex: int64 kernel first, Python integers if it overflows
    if tab.M.dtype != object and all(-_LIMIT < v < _LIMIT for v in rhs):
        M = tab.M.copy()
        r64 = np.array([int(v) for v in rhs], dtype=np.int64)
        basis = tab.basis.astype(np.intp)
        buf = np.empty((20 * (n + N) + 1000, 2), dtype=np.intp)
        status, D, k = kernels.simplex(M, r64, basis, np.ascontiguousarray(rank, dtype=np.int64),
                                       tab.D, buf, _RULES[rule])
        if status == _UNBOUNDED:
            raise Unbounded("local-weight program is unbounded (corrupt input)")
        if status in (_OPTIMAL, _TRACE_FULL):
            for j, leave in buf[:k]:
                trace.append((int(j), int(leave)))
                if verbose:
                    log.info("pivot %d: enter %d leave %d", len(trace), j, leave)
            tab.M, tab.D, tab.basis = M, int(D), basis
            rhs = r64.astype(object)
        else:
            log.debug("int64 simplex overflowed; redoing with Python integers")
    degenerate = 0
    while True:
        neg = np.flatnonzero(tab.M[N] < 0)
        if neg.size == 0:
            break
        if rule == BLAND or degenerate >= _DEGENERATE_RUN:
            j = int(neg[np.argmin(rank[neg])])
        else:
            cost = tab.M[N, neg]
            best = neg[cost == cost.min()]
            j = int(best[np.argmin(rank[best])])
        col = tab.M[:N, j]
        cand = np.flatnonzero(col > 0)
        if cand.size == 0:
            raise Unbounded("local-weight program is unbounded (corrupt input)")
        r = _ratio_test(cand, col, rhs, rank[tab.basis])
        degenerate = degenerate + 1 if rhs[r] == 0 else 0
        record(j, r)
        rhs = tab.pivot(r, j, rhs)
    return tab, rhs, trace


def _float_support(A: np.ndarray, Q: list):
    """Support columns and tight rows of a floating-point optimum, or None."""
    from scipy.optimize import linprog

    q = np.array([float(v) for v in Q])
    scale = q.max() if q.size and q.max() > 0 else 1.0
    q = q / scale
    res = linprog(-np.ones(A.shape[1]), A_ub=A, b_ub=q, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return np.flatnonzero(res.x > 1e-9), np.abs(q - A @ res.x) <= 1e-9


def _guided_start(s: Scenario, Q: list) -> "_Tableau | None":
    """Slack tableau pivoted onto the support of a floating-point optimum.

    Returns None when the support does not give a primal feasible basis (the
    caller then starts from the slack basis).
    """
    A = vertex_matrix(s)
    found = _float_support(A, Q)
    if found is None:
        return None
    cols, tight = found
    tab = _Tableau.slack_start(A)
    rhs = tab.rhs_for(Q)
    N = tab.N
    # rows whose slack is positive at the optimum keep their slack basic
    locked = ~tight
    for j in cols:
        col = tab.M[:N, j]
        free = np.flatnonzero((col != 0) & ~locked)
        if free.size == 0:
            continue
        r = int(free[np.argmax(np.abs(col[free]))])
        if tab.M[r, j] < 0:
            tab.negate_row(r, rhs)
        rhs = tab.pivot(r, int(j), rhs)
        locked[r] = True
    if any(v < 0 for v in rhs[:N]):
        return None
    return tab


def _ratio_test(cand, col, rhs, basis) -> int:
    """Minimum-ratio row; ties go to the lowest-ranked basic variable (Bland)."""
    zero = cand[rhs[cand] == 0]
    if zero.size:
        return int(zero[np.argmin(basis[zero])])
    best = int(cand[0])
    for i in cand[1:]:
        i = int(i)
        lhs = rhs[i] * int(col[best])
        rhs_b = rhs[best] * int(col[i])
        if lhs < rhs_b or (lhs == rhs_b and basis[i] < basis[best]):
            best = i
    return best


def local_weight(q: Distribution, rule: str = DANTZIG) -> Fraction:
    return solve_local_weight(q, rule=rule).primal_value


def _dual_certificate(s: Scenario, Q: list, L: int, y: np.ndarray) -> bool:
    """True when a rounded float dual proves local weight < 1 exactly.

    ``y`` is scaled to integers ``Y``; with ``m`` the smallest vertex value,
    ``Y / m`` is dual feasible, so ``q . Y / m < 1`` bounds the local weight.
    """
    Y = np.rint(np.clip(y, 0, None) * 2 ** 30).astype(np.int64)
    vals = Y[vertex_support_cached(s)].sum(axis=1)
    m = int(vals.min())
    if m <= 0:
        return False
    return sum(int(a) * int(b) for a, b in zip(Q, Y)) < m * L


_SUPPORT_CACHE: dict = {}


def vertex_support_cached(s: Scenario) -> np.ndarray:
    sup = _SUPPORT_CACHE.get(s)
    if sup is None:
        from .scenario import vertex_support
        sup = _SUPPORT_CACHE[s] = vertex_support(s)
    return sup


def is_local(q: Distribution, guided: "bool | None" = None) -> bool:
    """Exact locality test.

    With ``guided`` (default on scenarios above 200 vertices) a floating-point
    solve proposes the answer and an exact certificate confirms it: a rounded
    dual for non-locality, a guided exact solve for locality. Anything not
    confirmed falls back to the plain exact simplex.
    """
    s = q.scenario
    if guided is None:
        guided = s.n_vertices > 200
    if not guided:
        return local_weight(q) == 1
    vals = [Fraction(v) for v in q.entries]
    if any(v < 0 for v in vals):
        raise Infeasible("objective seed has negative entries")
    Q, L = scale_to_integers(vals)
    found = _float_dual(s, Q)
    if found is not None:
        value, y = found
        if value < 1 - 1e-9 and _dual_certificate(s, Q, L, y):
            return False
    return solve_local_weight(q, rule=DANTZIG, guided=True).primal_value == 1


def _float_dual(s: Scenario, Q: list):
    from scipy.optimize import linprog

    A = vertex_matrix(s)
    q = np.array([float(v) for v in Q])
    q = q / q.sum() * (s.mA * s.mB)
    res = linprog(-np.ones(A.shape[1]), A_ub=A, b_ub=q, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return -res.fun, -np.asarray(res.ineqlin.marginals)


def dual_bell(p: Union[LocalWeightProblem, Distribution]) -> Union[BellInequality, LocalCertificate]:
    """Bell inequality certifying non-locality of ``q``, or a local decomposition of it."""
    p = _as_problem(p)
    sol = solve_local_weight(p)
    if sol.primal_value == 1:
        return LocalCertificate(p.scenario, sol.x)
    return BellInequality(p.scenario, sol.y, 1)


def check_optimality(p: Union[LocalWeightProblem, Distribution], sol: LPSolution) -> dict:
    """Exact feasibility, strong-duality and complementary-slackness residuals."""
    p = _as_problem(p)
    A = p.A.astype(object)
    q = np.array([Fraction(v) for v in p.q.entries], dtype=object)
    x = np.array(sol.x, dtype=object)
    y = np.array(sol.y, dtype=object)
    Ax = A.dot(x)
    ATy = A.T.dot(y)
    return {
        "primal_feasible": bool(all(v >= 0 for v in x) and all(Ax[i] <= q[i] for i in range(len(q)))),
        "dual_feasible": bool(all(v >= 0 for v in y) and all(v >= 1 for v in ATy)),
        "strong_duality": sum(x) == sol.primal_value == q.dot(y),
        "slack_primal": (q - Ax).dot(y) == 0,
        "slack_dual": (ATy - 1).dot(x) == 0,
    }
