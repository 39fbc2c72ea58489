"""Kernel dispatch: the compiled extension when it was built, numpy otherwise.

Set ``BELLFACETS_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("BELLFACETS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

pivot_into = _impl.pivot_into
pivot_object = _kernels_py.pivot_object


def use_backend(name: str) -> None:
    """Switch implementation at runtime (``"compiled"`` or ``"python"``); used by benchmarks."""
    global _impl, BACKEND, pivot_into
    if name == "python":
        _impl = _kernels_py
    elif name == "compiled":
        from . import _kernels as compiled  # raises ImportError if not built
        _impl = compiled
    else:
        raise ValueError(name)
    BACKEND = name
    pivot_into = _impl.pivot_into


def pivot(T: np.ndarray, out: np.ndarray, r: int, s: int, D: int) -> int:
    return _impl.pivot_into(T, out, r, s, D)


def simplex(M, rhs, basis, rank, D, trace, rule: int = 0):
    """In-place primal simplex on int64 storage; see ``_kernels.simplex_int64``."""
    return _impl.simplex_int64(M, rhs, basis, rank, D, trace, rule)


def rank(M) -> int:
    """Exact rank of an integer (or integer-valued object) matrix."""
    M = np.asarray(M)
    if M.size == 0:
        return 0
    if M.dtype != object:
        try:
            return _impl.rank_int64(np.ascontiguousarray(M, dtype=np.int64))
        except OverflowError:
            pass
    return _kernels_py.rank_object(M)
