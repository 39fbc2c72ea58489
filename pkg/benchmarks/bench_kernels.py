"""Compiled vs pure-Python kernels on the exact-LP workloads that dominate a search.

Run: ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

import numpy as np

from bellfacets import kernels
from bellfacets.detection import eta_extend
from bellfacets.exactlp import is_local, solve_scaled
from bellfacets.facetgen import run_search
from bellfacets.scenario import Scenario, enumerate_ns_extremal_sa, pr_box
from bellfacets._rational import scale_to_integers


def _seed_lps(s: Scenario, n=None):
    seeds = enumerate_ns_extremal_sa(s)[:n]
    ints = [scale_to_integers(list(q.entries))[0] for q in seeds]
    return lambda: [solve_scaled(s, Q) for Q in ints]


def _rank():
    rng = np.random.default_rng(0)
    M = rng.integers(-3, 4, size=(60, 120))
    return lambda: kernels.rank(M)


def _search33():
    s = Scenario.parse("3,3,2,2")
    return lambda: run_search(s)


def _locality():
    q = pr_box()
    etas = [Fraction(k, 300) for k in range(150, 250, 7)]
    return lambda: [is_local(eta_extend(q, e)) for e in etas]


WORKLOADS = {
    "seed LPs (3,3,2,2)": lambda: _seed_lps(Scenario.parse("3,3,2,2")),
    "seed LPs (4,4,2,2) x16": lambda: _seed_lps(Scenario.parse("4,4,2,2"), 16),
    "rank 60x120": _rank,
    "locality scan CHSH": _locality,
    "search (3,3,2,2)": _search33,
}


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        kernels.use_backend("compiled")
        have_compiled = True
    except ImportError:
        have_compiled = False
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'workload':28s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s}")
    for name, make in WORKLOADS.items():
        fn = make()
        tc = None
        if have_compiled:
            kernels.use_backend("compiled")
            tc = _time(fn, args.repeat)
        kernels.use_backend("python")
        tp = _time(fn, args.repeat)
        tc_s = f"{tc:11.4f}" if tc is not None else f"{'-':>11s}"
        sp = f"{tp / tc:8.1f}" if tc else f"{'-':>8s}"
        print(f"{name:28s} {tc_s} {tp:10.4f} {sp}")
    if have_compiled:
        kernels.use_backend("compiled")


if __name__ == "__main__":
    main()
