"""Solve a sparse SDPA file with cvxpy and print an SDPA-style report.

Usage: ``python -m bellfacets.sdp_bridge problem.dat-s``. Stands in for an
external SDPA binary when none is installed.
"""

from __future__ import annotations

import sys
import warnings

import numpy as np


def _block_operator(p, blk: int, size: int):
    """Dense ``(size*size, m)`` operator and offset so that ``vec(X) = A x - f0``."""
    import scipy.sparse as sp

    rows, cols, vals = [], [], []
    f0 = np.zeros(size * size)
    for k, Fk in enumerate(p.F):
        for (b, i, j), v in Fk.items():
            if b != blk:
                continue
            for r, c in {(i - 1, j - 1), (j - 1, i - 1)}:
                if k == 0:
                    f0[r * size + c] = float(v)
                else:
                    rows.append(r * size + c)
                    cols.append(k - 1)
                    vals.append(float(v))
    A = sp.csr_matrix((vals, (rows, cols)), shape=(size * size, p.m))
    return A, f0


def _diag_operator(p, blk: int, size: int):
    import scipy.sparse as sp

    rows, cols, vals = [], [], []
    f0 = np.zeros(size)
    for k, Fk in enumerate(p.F):
        for (b, i, j), v in Fk.items():
            if b != blk or i != j:
                continue
            if k == 0:
                f0[i - 1] = float(v)
            else:
                rows.append(i - 1)
                cols.append(k - 1)
                vals.append(float(v))
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, p.m)), f0


def solve_problem(p, solver: str | None = None) -> dict:
    """Minimise ``c . x`` s.t. ``sum x_i F_i - F_0 >= 0``; returns status and both objectives."""
    try:
        import cvxpy as cp
    except ImportError:
        from .errors import SolverUnavailable
        raise SolverUnavailable("no SDP solver: install the 'sdp' extra (cvxpy) or set SDP_SOLVER") from None

    x = cp.Variable(p.m)
    cons, f0s = [], []
    for blk, size in enumerate(p.block_sizes, start=1):
        if size > 0:
            A, f0 = _block_operator(p, blk, size)
            X = cp.reshape(A @ x - f0, (size, size), order="C")
            cons.append(0.5 * (X + X.T) >> 0)
            f0s.append(f0.reshape(size, size))
        else:
            A, f0 = _diag_operator(p, blk, -size)
            cons.append(A @ x - f0 >= 0)
            f0s.append(f0)
    prob = cp.Problem(cp.Minimize(np.array([float(v) for v in p.c]) @ x), cons)
    order = [solver] if solver else ["CLARABEL", "SCS"]
    status = "failed"
    for name in order:
        if name not in cp.installed_solvers():
            continue
        try:
            with warnings.catch_warnings():
                # inaccurate solves are reported through the status instead
                warnings.simplefilter("ignore", UserWarning)
                prob.solve(solver=name)
        except cp.error.SolverError:
            continue
        status = {"optimal": "optimal", "optimal_inaccurate": "inaccurate"}.get(prob.status, "failed")
        if status != "failed":
            break
    if status == "failed":
        return {"status": "failed", "primal": float("nan"), "dual": float("nan"),
                "raw_status": prob.status}
    dual = 0.0
    for con, f0 in zip(cons, f0s):
        Y = np.asarray(con.dual_value, dtype=float)
        dual += float(np.sum(f0 * Y.reshape(f0.shape)))
    return {"status": status, "primal": float(prob.value), "dual": dual, "raw_status": prob.status}


def main(argv=None) -> int:
    from .npa import parse_sdpa

    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: python -m bellfacets.sdp_bridge problem.dat-s", file=sys.stderr)
        return 2
    with open(argv[0]) as fh:
        p = parse_sdpa(fh.read())
    res = solve_problem(p)
    phase = {"optimal": "pdOPT", "inaccurate": "pdFEAS"}.get(res["status"], "noINFO")
    print(f"phase.value = {phase}")
    print(f"objValPrimal = {res['primal']:.17g}")
    print(f"objValDual = {res['dual']:.17g}")
    return 0 if res["status"] != "failed" else 1


if __name__ == "__main__":
    sys.exit(main())
