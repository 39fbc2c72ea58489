"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``.

Same contracts: int64 inputs, OverflowError when a result would leave the
safe range, inputs untouched on failure.
"""

from __future__ import annotations

import numpy as np

LIMIT = 2 ** 62
_SAFE = 2 ** 30  # |a|, |b| below this keeps a*b - c*d inside int64


def _fits_int64_products(*arrays) -> bool:
    return all(int(np.abs(a).max(initial=0)) < _SAFE for a in arrays)


def pivot_into(T: np.ndarray, out: np.ndarray, r: int, s: int, D: int) -> int:
    p = int(T[r, s])
    if p <= 0:
        raise ValueError("pivot element must be positive")
    if D <= 0:
        raise ValueError("denominator must be positive")
    col = T[:, s]
    row = T[r]
    if _fits_int64_products(col, row) and abs(p) < _SAFE and _fits_int64_products(T):
        res = T * p - np.outer(col, row)
        if D != 1:
            res //= D
    else:
        res = pivot_object(T.astype(object), r, s, D)
        if np.abs(res).max(initial=0) >= LIMIT:
            raise OverflowError("tableau entry left int64 range")
        res = res.astype(np.int64)
    out[...] = res
    out[r] = row
    return p


def pivot_object(T: np.ndarray, r: int, s: int, D: int) -> np.ndarray:
    """The same pivot on an object (Python int) array; never overflows."""
    p = T[r, s]
    res = T * p - np.outer(T[:, s], T[r])
    if D != 1:
        res //= D
    res[r] = T[r]
    return res


def rank_int64(M) -> int:
    A = np.array(M, dtype=np.int64, copy=True)
    if A.size and int(np.abs(A).max()) >= LIMIT:
        raise OverflowError("input entry outside int64 safe range")
    return _bareiss_rank(A, overflow_check=True)


def rank_object(M) -> int:
    A = np.array(M, dtype=object, copy=True)
    return _bareiss_rank(A, overflow_check=False)


def _bareiss_rank(A: np.ndarray, overflow_check: bool) -> int:
    rows, cols = A.shape
    rk = 0
    prev = 1
    for col in range(cols):
        if rk == rows:
            break
        nz = np.flatnonzero(A[rk:, col])
        if nz.size == 0:
            continue
        piv = rk + int(nz[0])
        if piv != rk:
            A[[rk, piv]] = A[[piv, rk]]
        p = A[rk, col]
        if rk + 1 < rows:
            sub = A[rk + 1:, col + 1:]
            f = A[rk + 1:, col]
            prow = A[rk, col + 1:]
            if overflow_check and not (_fits_int64_products(sub, f, prow) and abs(int(p)) < _SAFE):
                raise OverflowError("elimination entry left int64 range")
            sub[...] = (sub * p - np.outer(f, prow)) // prev
            A[rk + 1:, col] = 0
        prev = abs(p)
        rk += 1
    return rk


DEGENERATE_RUN = 50


def simplex_int64(M: np.ndarray, rhs: np.ndarray, basis: np.ndarray, rank: np.ndarray,
                  D: int, trace: np.ndarray, rule: int = 0) -> tuple[int, int, int]:
    """Numpy twin of the compiled primal simplex (same contract and pivot sequence)."""
    N = M.shape[0] - 1
    cap = trace.shape[0]
    k = 0
    degenerate = 0
    while True:
        neg = np.flatnonzero(M[N] < 0)
        if neg.size == 0:
            return 0, D, k
        if rule == 0 or degenerate >= DEGENERATE_RUN:
            c = int(neg[np.argmin(rank[neg])])
        else:
            cost = M[N, neg]
            best = neg[cost == cost.min()]
            c = int(best[np.argmin(rank[best])])
        col = M[:N, c]
        cand = np.flatnonzero(col > 0)
        if cand.size == 0:
            return 1, D, k
        r = int(cand[0])
        for i in cand[1:]:
            i = int(i)
            lhs = int(rhs[i]) * int(col[r])
            rb = int(rhs[r]) * int(col[i])
            if lhs < rb or (lhs == rb and rank[basis[i]] < rank[basis[r]]):
                r = i
        if k >= cap:
            return 3, D, k
        trace[k] = (c, basis[r])
        k += 1
        degenerate = degenerate + 1 if rhs[r] == 0 else 0
        p = int(M[r, c])
        T = np.column_stack([M, rhs])
        out = np.empty_like(T)
        try:
            pivot_into(T, out, r, c, D)
        except OverflowError:
            return 2, D, k
        M[...] = out[:, :-1]
        rhs[...] = out[:, -1]
        basis[r] = c
        D = p
