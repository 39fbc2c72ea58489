# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integer kernels: fraction-free tableau pivot and exact matrix rank.

Both work on int64 storage with 128-bit intermediates. Any result that would
leave the safe range raises OverflowError and leaves the inputs untouched, so
the caller can redo the step with Python integers.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    ctypedef long long i128 "__int128"

cdef long long LIMIT = 4611686018427387904  # 2**62
cdef long long SMALL = 1073741824  # 2**30
cdef long long TINY = 16777216  # 2**24
cdef Py_ssize_t DEGENERATE_RUN = 50


def pivot_into(const long long[:, ::1] T, long long[:, ::1] out,
               Py_ssize_t r, Py_ssize_t s, long long D):
    """Integer pivot of ``T`` on ``(r, s)`` written into ``out``; returns the new denominator.

    ``out[i] = (T[i] * p - T[i, s] * T[r]) / D`` for ``i != r`` and ``out[r] = T[r]``
    where ``p = T[r, s] > 0``.
    """
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1], i, j
    cdef long long p = T[r, s], f, m = 0, a
    cdef i128 v
    if p <= 0:
        raise ValueError("pivot element must be positive")
    if D <= 0:
        raise ValueError("denominator must be positive")
    with nogil:
        for i in range(rows):
            for j in range(cols):
                a = T[i, j]
                if a < 0:
                    a = -a
                if a > m:
                    m = a
    if m < SMALL and p < SMALL:
        # products and their difference stay inside int64: plain 64-bit arithmetic
        with nogil:
            for i in range(rows):
                if i == r:
                    for j in range(cols):
                        out[i, j] = T[i, j]
                    continue
                f = T[i, s]
                if f == 0:
                    if p == D:
                        for j in range(cols):
                            out[i, j] = T[i, j]
                    else:
                        for j in range(cols):
                            out[i, j] = (T[i, j] * p) / D
                else:
                    for j in range(cols):
                        out[i, j] = (T[i, j] * p - f * T[r, j]) / D
        return p
    with nogil:
        for i in range(rows):
            if i == r:
                for j in range(cols):
                    out[i, j] = T[i, j]
                continue
            f = T[i, s]
            for j in range(cols):
                v = <i128>T[i, j] * p
                if f != 0:
                    v -= <i128>f * T[r, j]
                if D != 1:
                    v = v / D
                if v >= LIMIT or v <= -LIMIT:
                    with gil:
                        raise OverflowError("tableau entry left int64 range")
                out[i, j] = <long long>v
    return p


def rank_int64(M):
    """Exact rank of an integer matrix by fraction-free (Bareiss) elimination."""
    cdef long long[:, ::1] A = np.array(M, dtype=np.int64, order="C", copy=True)
    cdef Py_ssize_t rows = A.shape[0], cols = A.shape[1]
    cdef Py_ssize_t rk = 0, col, i, j, piv
    cdef long long prev = 1, p, f, tmp
    cdef i128 v
    with nogil:
        for col in range(cols):
            if rk == rows:
                break
            piv = -1
            for i in range(rk, rows):
                if A[i, col] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != rk:
                for j in range(col, cols):
                    tmp = A[piv, j]
                    A[piv, j] = A[rk, j]
                    A[rk, j] = tmp
            p = A[rk, col]
            for i in range(rk + 1, rows):
                f = A[i, col]
                for j in range(col + 1, cols):
                    v = <i128>A[i, j] * p - <i128>f * A[rk, j]
                    v = v / prev
                    if v >= LIMIT or v <= -LIMIT:
                        with gil:
                            raise OverflowError("elimination entry left int64 range")
                    A[i, j] = <long long>v
                A[i, col] = 0
            # dividing by |p| instead of p only flips the sign of a whole step
            prev = p if p > 0 else -p
            rk += 1
    return rk


cdef inline void _track(long long a, long long* mx) noexcept nogil:
    if a < 0:
        a = -a
    if a > mx[0]:
        mx[0] = a


cdef int _simplex(long long[:, ::1] M, long long[::1] rhs, Py_ssize_t[::1] basis,
                  const long long[::1] rank, long long* Dp, Py_ssize_t[:, ::1] trace,
                  Py_ssize_t* kp, int rule, Py_ssize_t* nz) noexcept nogil:
    cdef Py_ssize_t N = M.shape[0] - 1, cols = M.shape[1]
    cdef Py_ssize_t i, j, c, r, k = 0, cap = trace.shape[0], nnz, t, degenerate = 0
    cdef long long p, f, best_rank, best_cost, mx = 0, D = Dp[0], q
    cdef i128 v, lhs, rhs_b
    cdef double inv
    cdef bint tiny, small, bland
    for i in range(N + 1):
        _track(rhs[i], &mx)
        for j in range(cols):
            _track(M[i, j], &mx)
    while True:
        # entering column: Bland (lowest rank), or Dantzig (most negative cost,
        # ties by rank) until a run of DEGENERATE_RUN degenerate pivots
        bland = rule == 0 or degenerate >= DEGENERATE_RUN
        c = -1
        best_rank = -1
        best_cost = 0
        for j in range(cols):
            if M[N, j] >= 0:
                continue
            if bland:
                if c < 0 or rank[j] < best_rank:
                    c = j
                    best_rank = rank[j]
            elif c < 0 or M[N, j] < best_cost or (M[N, j] == best_cost and rank[j] < best_rank):
                c = j
                best_rank = rank[j]
                best_cost = M[N, j]
        if c < 0:
            Dp[0] = D
            kp[0] = k
            return 0
        # ratio test, ties to the lowest-ranked basic variable
        r = -1
        for i in range(N):
            if M[i, c] <= 0:
                continue
            if r < 0:
                r = i
                continue
            lhs = <i128>rhs[i] * M[r, c]
            rhs_b = <i128>rhs[r] * M[i, c]
            if lhs < rhs_b or (lhs == rhs_b and rank[basis[i]] < rank[basis[r]]):
                r = i
        if r < 0:
            Dp[0] = D
            kp[0] = k
            return 1
        if k >= cap:
            Dp[0] = D
            kp[0] = k
            return 3
        trace[k, 0] = c
        trace[k, 1] = basis[r]
        k += 1
        degenerate = degenerate + 1 if rhs[r] == 0 else 0
        p = M[r, c]
        # |a*p - f*b| < 2^49 when everything is below 2^24: exact in a double
        tiny = mx < TINY and p < TINY
        small = mx < SMALL and p < SMALL
        inv = 1.0 / <double>D
        nnz = 0
        for j in range(cols):
            if M[r, j] != 0:
                nz[nnz] = j
                nnz += 1
        mx = p
        for i in range(N + 1):
            if i == r:
                continue
            f = M[i, c]
            if p == D:
                # unchanged where row r is zero
                if f != 0:
                    for t in range(nnz):
                        j = nz[t]
                        if small:
                            M[i, j] = (M[i, j] * p - f * M[r, j]) / D
                        else:
                            v = (<i128>M[i, j] * p - <i128>f * M[r, j]) / D
                            if v >= LIMIT or v <= -LIMIT:
                                return 2
                            M[i, j] = <long long>v
            elif tiny:
                for j in range(cols):
                    q = M[i, j] * p - f * M[r, j]
                    M[i, j] = <long long>(<double>q * inv + (0.5 if q > 0 else -0.5))
            elif small:
                if D == 1:
                    for j in range(cols):
                        M[i, j] = M[i, j] * p - f * M[r, j]
                else:
                    for j in range(cols):
                        M[i, j] = (M[i, j] * p - f * M[r, j]) / D
            else:
                for j in range(cols):
                    v = (<i128>M[i, j] * p - <i128>f * M[r, j]) / D
                    if v >= LIMIT or v <= -LIMIT:
                        return 2
                    M[i, j] = <long long>v
            v = (<i128>rhs[i] * p - <i128>f * rhs[r]) / D
            if v >= LIMIT or v <= -LIMIT:
                return 2
            rhs[i] = <long long>v
            _track(rhs[i], &mx)
            for j in range(cols):
                _track(M[i, j], &mx)
        for j in range(cols):
            _track(M[r, j], &mx)
        _track(rhs[r], &mx)
        basis[r] = c
        D = p


def simplex_int64(long long[:, ::1] M, long long[::1] rhs, Py_ssize_t[::1] basis,
                  const long long[::1] rank, long long D, Py_ssize_t[:, ::1] trace,
                  int rule=0):
    """Primal simplex with Bland's rule on the integer tableau ``M / D``, in place.

    Rows ``0..N-1`` are constraints, row ``N`` the objective; ``rhs`` has the
    same row layout. Entering variable: the lowest-ranked column with negative
    reduced cost (``rule=0``), or with ``rule=1`` the most negative one, falling
    back to the lowest-ranked while a degenerate run lasts. Leaving row: minimum ratio, ties to the lowest-ranked basic
    variable. Pivots are recorded in ``trace`` as (entering, leaving).

    Returns ``(status, D, pivots)``: status 0 optimal, 1 unbounded, 2 overflow
    (tableau left in an undefined state; the caller must redo the solve with
    Python integers), 3 trace buffer full.
    """
    cdef Py_ssize_t k = 0
    cdef int status
    cdef Py_ssize_t[::1] nz = np.empty(M.shape[1], dtype=np.intp)
    with nogil:
        status = _simplex(M, rhs, basis, rank, &D, trace, &k, rule, &nz[0])
    return status, D, k
