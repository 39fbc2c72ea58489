"""Bell-inequality generation from extremal no-signalling seeds.

Inequalities are compared through their vertex-value vectors, affine-fixed so
that the smallest value is 1 and the next distinct value is 2. Two inequalities
are in the same class when a relabelling maps one signature onto the other.
A relabelling acts on the vertex list as a structured permutation: reshaped into
a tensor with one axis per measurement, it permutes Alice's axes among
themselves, Bob's axes among themselves, permutes indices along every axis, and
(square scenarios) exchanges the two groups of axes. Equivalence and stabiliser
counts are found by searching that structure with slice-tally pruning instead
of walking the whole group.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import math
import threading
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import kernels
from ._rational import scale_to_integers
from .errors import DegenerateConstantVector, NonBinaryScenario, TooLarge
from .exactlp import solve_scaled
from .scenario import (BellInequality, Distribution, Scenario, enumerate_ns_extremal_sa,
                       vertex_digits, vertex_matrix, vertex_support)

log = logging.getLogger(__name__)

TALLY = "tally"
FULL = "full"
DEFAULT_NOISE = (Fraction(1, 100),)
NOISE_SCHEDULE = (Fraction(1, 100), Fraction(1, 50), Fraction(1, 20), Fraction(1, 10))


# ---------------------------------------------------------------------------
# signatures


def _vertex_values_int(s: Scenario, coeffs: Sequence[Fraction]) -> tuple[np.ndarray, int]:
    ints, L = scale_to_integers([Fraction(c) for c in coeffs])
    arr = np.array(ints, dtype=object)
    if all(-2 ** 40 < v < 2 ** 40 for v in ints):
        arr = arr.astype(np.int64)
    return arr[vertex_support(s)].sum(axis=1), L


def values_at_vertices(b: BellInequality) -> tuple:
    """Value of ``b`` at every deterministic point, in enumeration order."""
    vals, L = _vertex_values_int(b.scenario, b.entries)
    return tuple(Fraction(int(v), L) for v in vals)


@dataclass(frozen=True)
class AffineSignature:
    values: tuple
    tally: tuple  # sorted (value, count) pairs

    @property
    def tally_dict(self) -> dict:
        return dict(self.tally)

    def scaled(self) -> tuple[np.ndarray, int]:
        """Integer vector ``V`` and denominator ``L`` with ``values == V / L``."""
        ints, L = scale_to_integers(self.values)
        return np.array(ints, dtype=np.int64), L

    def key(self) -> bytes:
        V, L = self.scaled()
        return L.to_bytes(8, "little") + V.tobytes()


def _affine_fix_ints(vals: np.ndarray, L: int) -> AffineSignature:
    uniq = np.unique(vals)
    if uniq.size < 2:
        raise DegenerateConstantVector("all vertex values are equal")
    lo, gamma = int(uniq[0]), int(uniq[1])
    # 1 + (c - lo) / (gamma - lo), exact
    width = gamma - lo
    values = tuple(1 + Fraction(int(v) - lo, width) for v in vals)
    tally = tuple(sorted(Counter(values).items()))
    return AffineSignature(values, tally)


def affine_fix(c: Sequence) -> AffineSignature:
    """Map the smallest value to 1 and the second-smallest distinct value to 2."""
    ints, L = scale_to_integers([Fraction(v) for v in c])
    return _affine_fix_ints(np.array(ints, dtype=object), L)


def signature(b: BellInequality) -> AffineSignature:
    vals, L = _vertex_values_int(b.scenario, b.entries)
    return _affine_fix_ints(vals, L)


def saturating_vertices(b: BellInequality) -> np.ndarray:
    vals, L = _vertex_values_int(b.scenario, b.entries)
    target = b.bound * L
    if target.denominator != 1:
        return np.array([], dtype=np.int64)
    return np.flatnonzero(vals == int(target))


def facet_rank(b: BellInequality) -> int:
    sat = saturating_vertices(b)
    if sat.size == 0:
        return 0
    return kernels.rank(vertex_matrix(b.scenario)[:, sat].T)


def is_facet(b: BellInequality) -> bool:
    """Saturating vertices span a facet (rank t) and some vertex is strictly above the bound."""
    s = b.scenario
    vals, L = _vertex_values_int(s, b.entries)
    target = b.bound * L
    if target.denominator != 1:
        return False
    target = int(target)
    if not (vals >= target).all() or not (vals > target).any():
        return False
    sat = np.flatnonzero(vals == target)
    if sat.size < s.dimension:
        return False
    return kernels.rank(vertex_matrix(s)[:, sat].T) == s.dimension


def positivity_inequality(s: Scenario, a: int = 0, b: int = 0, x: int = 0, y: int = 0) -> BellInequality:
    """``p(ab|xy) >= 0`` written in bound-1 form via normalisation."""
    per = Fraction(1, s.mA * s.mB)
    coeffs = [per] * s.n_entries
    coeffs[s.index(a, b, x, y)] += 1
    return BellInequality(s, coeffs, 1)


# ---------------------------------------------------------------------------
# equivalence under relabellings


class SignatureTensor:
    """A signature reshaped onto one axis per measurement, with per-axis invariants."""

    def __init__(self, s: Scenario, V: np.ndarray):
        self.scenario = s
        shape = (s.kA,) * s.mA + (s.kB,) * s.mB
        self.T = np.ascontiguousarray(V.reshape(shape))
        self.slice_keys = []
        for ax in range(s.mA + s.mB):
            moved = np.moveaxis(self.T, ax, 0)
            self.slice_keys.append(tuple(np.sort(moved[v], axis=None).tobytes()
                                         for v in range(shape[ax])))
        self.axis_keys = [tuple(sorted(k)) for k in self.slice_keys]

    def swapped(self) -> "SignatureTensor":
        s = self.scenario
        perm = list(range(s.mA, s.mA + s.mB)) + list(range(s.mA))
        V = np.transpose(self.T, perm).ravel()
        return SignatureTensor(s.swapped(), V)


def _group_matchings(src_keys, dst_keys) -> Optional[list[list[tuple]]]:
    """Per-class lists of bijections ``dst position -> src position`` with equal keys."""
    by_key_src: dict = {}
    by_key_dst: dict = {}
    for i, k in enumerate(src_keys):
        by_key_src.setdefault(k, []).append(i)
    for i, k in enumerate(dst_keys):
        by_key_dst.setdefault(k, []).append(i)
    if {k: len(v) for k, v in by_key_src.items()} != {k: len(v) for k, v in by_key_dst.items()}:
        return None
    return [(by_key_dst[k], by_key_src[k]) for k in sorted(by_key_dst)]


def _bijections(groups) -> Iterator[dict]:
    """All maps dst -> src that respect the key classes."""
    per_class = [[dict(zip(dst, perm)) for perm in itertools.permutations(src)]
                 for dst, src in groups]
    for combo in itertools.product(*per_class):
        m = {}
        for part in combo:
            m.update(part)
        yield m


def _matches(src: SignatureTensor, dst: SignatureTensor, stop_at_first: bool) -> int:
    """Number of (axis map, index maps) taking ``src`` onto ``dst`` without party swap."""
    s = src.scenario
    nA = s.mA
    axes_a = _group_matchings(src.axis_keys[:nA], dst.axis_keys[:nA])
    axes_b = _group_matchings(src.axis_keys[nA:], dst.axis_keys[nA:])
    if axes_a is None or axes_b is None:
        return 0
    axes_b = [([d + nA for d in dd], [v + nA for v in ss]) for dd, ss in axes_b]
    n_axes = s.mA + s.mB
    count = 0
    for amap in _bijections(axes_a):
        for bmap in _bijections(axes_b):
            amap_full = {**amap, **bmap}
            order = [amap_full[d] for d in range(n_axes)]
            Tp = np.transpose(src.T, order)
            # index maps along each destination axis, respecting slice tallies
            choices = []
            ok = True
            for d in range(n_axes):
                g = _group_matchings(src.slice_keys[order[d]], dst.slice_keys[d])
                if g is None:
                    ok = False
                    break
                maps = []
                for m in _bijections(g):
                    maps.append(np.array([m[v] for v in range(len(m))], dtype=np.intp))
                choices.append(maps)
            if not ok:
                continue
            count += _count_index_maps(Tp, dst.T, choices, stop_at_first)
            if stop_at_first and count:
                return count
    return count


def _count_index_maps(Tp: np.ndarray, target: np.ndarray, choices, stop_at_first: bool) -> int:
    """Depth-first over axes; prune with the partially-mapped tensor's leading slices."""
    n = Tp.ndim
    count = 0

    def rec(d: int, arr: np.ndarray):
        nonlocal count
        if d == n:
            if np.array_equal(arr, target):
                count += 1
                return True
            return False
        for idx in choices[d]:
            sub = np.take(arr, idx, axis=d)
            # marginal check over the axes already fixed keeps the search narrow
            if d + 1 < n and not np.array_equal(np.sort(sub.reshape(sub.shape[:d + 1] + (-1,)), axis=-1),
                                                np.sort(target.reshape(target.shape[:d + 1] + (-1,)), axis=-1)):
                continue
            if rec(d + 1, sub) and stop_at_first:
                return True
        return False

    rec(0, Tp)
    return count


def equivalence_count(src: SignatureTensor, dst: SignatureTensor, stop_at_first: bool = False) -> int:
    """Number of relabellings mapping signature ``src`` to ``dst``."""
    s = src.scenario
    total = _matches(src, dst, stop_at_first)
    if stop_at_first and total:
        return total
    if s.is_square:
        total += _matches(src.swapped(), dst, stop_at_first)
    return total


def equivalent(a: AffineSignature, b: AffineSignature, s: Scenario) -> bool:
    if a.tally != b.tally:
        return False
    Va, La = a.scaled()
    Vb, Lb = b.scaled()
    if La != Lb:
        return False
    return equivalence_count(SignatureTensor(s, Va), SignatureTensor(s, Vb), True) > 0


def stabiliser_order(sig: AffineSignature, s: Scenario) -> int:
    V, _ = sig.scaled()
    t = SignatureTensor(s, V)
    return equivalence_count(t, t)


# ---------------------------------------------------------------------------
# registry


@dataclass
class InequalityClassRecord:
    id: int
    representative: BellInequality
    signature: AffineSignature
    orbit_size: Optional[int] = None
    provenance: dict = field(default_factory=dict)

    @property
    def tally(self) -> dict:
        return self.signature.tally_dict


@dataclass(frozen=True)
class New:
    record_id: int


@dataclass(frozen=True)
class KnownClassOf:
    record_id: int


class Registry:
    """Class representatives of one scenario; writes are serialised by a lock."""

    def __init__(self, scenario: Scenario, mode: str = FULL):
        if mode not in (TALLY, FULL):
            raise ValueError(f"mode must be {TALLY!r} or {FULL!r}")
        self.scenario = scenario
        self.mode = mode
        self.records: list[InequalityClassRecord] = []
        self._by_tally: dict = {}
        self._seen: dict = {}  # signature key -> record id
        self._lock = threading.Lock()
        self.candidates = 0
        self.history: list[tuple[int, int]] = []  # (candidates processed, classes) at each insert
        self.jobs_done = 0
        self.report = None

    def add_record(self, rec: InequalityClassRecord):
        """Insert a record without an equivalence check (used when loading a saved registry)."""
        rec.id = len(self.records)
        self.records.append(rec)
        self._by_tally.setdefault(rec.signature.tally, []).append(rec.id)
        self._seen[rec.signature.key()] = rec.id

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def _lookup(self, sig: AffineSignature, key: bytes) -> Optional[int]:
        hit = self._seen.get(key)
        if hit is not None:
            return hit
        ids = self._by_tally.get(sig.tally, [])
        if self.mode == TALLY:
            return ids[0] if ids else None
        for rid in ids:
            if equivalent(sig, self.records[rid].signature, self.scenario):
                self._seen[key] = rid
                return rid
        return None

    def classify(self, b: BellInequality, provenance: Optional[dict] = None,
                 sig: Optional[AffineSignature] = None):
        """Return ``KnownClassOf(id)`` or insert and return ``New(id)``."""
        sig = sig or signature(b)
        key = sig.key()
        with self._lock:
            self.candidates += 1
            rid = self._lookup(sig, key)
            if rid is not None:
                return KnownClassOf(rid)
            rid = len(self.records)
            self.records.append(InequalityClassRecord(rid, b, sig, None, dict(provenance or {})))
            self._by_tally.setdefault(sig.tally, []).append(rid)
            self._seen[key] = rid
            self.history.append((self.candidates, len(self.records)))
            return New(rid)

    def orbit_sizes(self) -> list[int]:
        return [orbit_size(r, self.scenario) for r in self.records]


def orbit_size(r: InequalityClassRecord, s: Optional[Scenario] = None) -> int:
    """Number of distinct facets in the class: group order over stabiliser order."""
    if r.orbit_size is None:
        s = s or r.representative.scenario
        r.orbit_size = s.group_order // stabiliser_order(r.signature, s)
    return r.orbit_size


# ---------------------------------------------------------------------------
# search


@dataclass
class SearchReport:
    candidates: int = 0
    facets: int = 0
    non_facets: int = 0
    failures: int = 0
    local: int = 0
    lps: int = 0
    seconds: float = 0.0
    new_per_window: list = field(default_factory=list)  # classes found per 10000 candidates


def noisy_seed(q: Distribution, d_alpha: Distribution, d_beta: Distribution, eta: Fraction) -> Distribution:
    """``(1 - 3 eta / 2) q + eta d_alpha + (eta / 2) d_beta``."""
    w = 1 - 3 * eta / 2
    return Distribution(q.scenario, [w * p + eta * u + eta / 2 * v
                                     for p, u, v in zip(q.entries, d_alpha.entries, d_beta.entries)])


def _reduced(ints) -> tuple:
    g = 0
    for v in ints:
        g = math.gcd(g, int(v))
    g = g or 1
    return tuple(int(v) // g for v in ints)


def _priority_from_ints(s: Scenario, Q: Sequence[int]) -> np.ndarray:
    digest = hashlib.sha256(",".join(map(str, Q)).encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.permutation(s.n_vertices + s.n_entries)


def task_priority(q: Distribution) -> np.ndarray:
    """Variable ranking for Bland's rule, keyed by the seed's exact content.

    Identical seeds always get the same ranking (so results are reproducible),
    while different noisy seeds walk different pivot paths through the highly
    degenerate dual and so land on different optimal vertices.
    """
    ints, _ = scale_to_integers([Fraction(v) for v in q.entries])
    return _priority_from_ints(q.scenario, _reduced(ints))


def _dual_of(tab) -> tuple:
    """Dual solution of a final tableau as reduced integers; the last entry is the denominator."""
    return _reduced([int(v) for v in tab.M[tab.N, tab.n:]] + [int(tab.D)])


PAIR_SOURCES = ("saturating", "mixed", "all")


def _pairs(s: Scenario, sat: list, source: str) -> Iterator[tuple]:
    """Ordered noise pairs, lexicographic in ``(alpha, beta)``."""
    if source == "saturating":
        return itertools.permutations(sat, 2)
    if source == "mixed":
        return ((a, b) for a in sat for b in range(s.n_vertices) if a != b)
    if source == "all":
        return itertools.permutations(range(s.n_vertices), 2)
    raise ValueError(f"pair source must be one of {PAIR_SOURCES}")


def _seed_tasks(s: Scenario, seed_index: int, seed: Distribution, noise: Sequence[Fraction],
                warm_start: bool = False, keyed: bool = True, pair_source: str = "mixed"):
    """Solve one seed and all of its noisy variants; yields ``(provenance, dual or None)``."""
    Qs, Lq = scale_to_integers([Fraction(v) for v in seed.entries])
    try:
        tab0, rhs0, _ = solve_scaled(s, Qs)
    except Exception as exc:  # pragma: no cover - corrupt input only
        log.warning("seed %d failed: %s", seed_index, exc)
        yield {"seed": seed_index}, None
        return
    y0 = _dual_of(tab0)
    yield {"seed": seed_index}, y0
    if rhs0[tab0.N] == tab0.D * Lq:  # local weight 1: nothing to cut off
        return
    vals = np.array(y0[:-1], dtype=object)[vertex_support(s)].sum(axis=1)
    sat = [int(i) for i in np.flatnonzero(vals == y0[-1])]
    sup = vertex_support(s)
    base = np.array(Qs, dtype=object)
    for alpha, beta in _pairs(s, sat, pair_source):
        for eta in noise:
            en, ed = eta.numerator, eta.denominator
            # (1 - 3 eta / 2) q + eta d_alpha + eta / 2 d_beta, times 2 ed Lq
            Qn = base * (2 * ed - 3 * en)
            Qn[sup[alpha]] += 2 * en * Lq
            Qn[sup[beta]] += en * Lq
            Qn = _reduced(Qn)
            prov = {"seed": seed_index, "alpha": alpha, "beta": beta, "eta": eta}
            try:
                tab, _, _ = solve_scaled(s, list(Qn),
                                         _priority_from_ints(s, Qn) if keyed else None,
                                         tab0 if warm_start else None)
            except Exception as exc:
                log.warning("task %s failed: %s", prov, exc)
                yield prov, None
                continue
            yield prov, _dual_of(tab)


def _solve_seed(args):
    return list(_seed_tasks(*args))


def _facet_signature(s: Scenario, y: tuple) -> Optional[AffineSignature]:
    """Signature of the inequality ``y[:-1] / y[-1] >= 1`` if it is a facet, else None."""
    D = y[-1]
    coeffs = np.array(y[:-1], dtype=object)
    if all(-2 ** 40 < v < 2 ** 40 for v in y):
        coeffs = coeffs.astype(np.int64)
    vals = coeffs[vertex_support(s)].sum(axis=1)
    if not (vals >= D).all() or not (vals > D).any():
        return None
    sat = np.flatnonzero(vals == D)
    if sat.size < s.dimension or kernels.rank(vertex_matrix(s)[:, sat].T) != s.dimension:
        return None
    return _affine_fix_ints(vals, D)


def run_search(s: Scenario, noise_levels: Sequence = DEFAULT_NOISE, mode: str = FULL,
               registry: Optional[Registry] = None, seeds: Optional[Sequence[Distribution]] = None,
               workers: int = 1, warm_start: bool = False, keyed: bool = True,
               pair_source: str = "mixed", patience: Optional[int] = None,
               progress=None, checkpoint=None, checkpoint_every: int = 10000) -> Registry:
    """Dual-LP facet search seeded by the extremal S/A no-signalling points.

    For every seed the dual is solved, then re-solved for every ordered noise
    pair and every noise level. ``pair_source`` picks the pairs: ``"saturating"``
    takes both vertices from the saturating set of the seed's solution,
    ``"mixed"`` (default) takes ``alpha`` from that set and ``beta`` from all
    vertices, ``"all"`` takes any two vertices. With both vertices saturating,
    the seed's solution stays optimal for every noisy seed, so only the pivot
    path can change the answer; a non-saturating ``beta`` makes the noise
    select facets through ``beta``. ``keyed`` ranks variables
    for Bland's rule by a hash of each noisy seed (see :func:`task_priority`);
    ``warm_start`` restarts from the seed's optimal basis instead of the slack
    basis. ``patience`` stops after that many consecutive facet candidates
    without a new class (unset: exhaust every task). ``checkpoint(registry)``
    is called every ``checkpoint_every`` candidates; a registry passed back in
    resumes after its ``jobs_done`` seeds.
    """
    if not s.is_binary:
        raise NonBinaryScenario("run_search needs binary outcomes; use run_search_quantum")
    noise = [Fraction(e) for e in noise_levels]
    seeds = list(seeds) if seeds is not None else enumerate_ns_extremal_sa(s)
    if pair_source not in PAIR_SOURCES:
        raise ValueError(f"pair source must be one of {PAIR_SOURCES}")
    jobs = [(s, i, q, noise, warm_start, keyed, pair_source) for i, q in enumerate(seeds)]
    return _drive(s, jobs, _solve_seed, _seed_tasks, mode, registry, workers, patience, progress,
                  checkpoint, checkpoint_every)


def _drive(s, jobs, solve_job, iter_job, mode, registry, workers, patience, progress,
           checkpoint=None, checkpoint_every: int = 10000) -> Registry:
    """Shared consumer: feeds dual solutions through the facet test into the registry."""
    reg = registry or Registry(s, mode)
    jobs = jobs[reg.jobs_done:]
    last_checkpoint = reg.candidates
    if getattr(reg, "report", None) is None:
        reg.report = SearchReport()
    rep = reg.report
    if not len(reg):
        reg.classify(positivity_inequality(s), {"source": "positivity"})
    t0 = time.time()
    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        results: Iterable = pool.map(solve_job, jobs)
    else:
        pool = None
        results = (iter_job(*job) for job in jobs)
    last_new = reg.candidates
    seen: set = set()
    window_start, window_new = reg.candidates, 0
    try:
        for batch in results:
            for prov, y in batch:
                rep.lps += 1
                if y is None:
                    if prov.get("local"):
                        rep.local += 1
                    else:
                        rep.failures += 1
                    continue
                if y in seen:
                    continue
                seen.add(y)
                sig = _facet_signature(s, y)
                if sig is None:
                    rep.non_facets += 1
                    continue
                rep.facets += 1
                b = BellInequality(s, [Fraction(v, y[-1]) for v in y[:-1]], 1)
                prov = dict(prov, source=prov.get("source", "search"))
                if "eta" in prov:
                    prov["eta"] = str(prov["eta"])
                res = reg.classify(b, prov, sig=sig)
                rep.candidates += 1
                if isinstance(res, New):
                    window_new += 1
                    last_new = reg.candidates
                    if progress:
                        progress(reg)
                if reg.candidates - window_start >= 10000:
                    rep.new_per_window.append(window_new)
                    window_start, window_new = reg.candidates, 0
                if patience and reg.candidates - last_new >= patience:
                    raise StopIteration
            reg.jobs_done += 1
            if checkpoint and reg.candidates - last_checkpoint >= checkpoint_every:
                checkpoint(reg)
                last_checkpoint = reg.candidates
    except StopIteration:
        pass
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    rep.new_per_window.append(window_new)
    rep.seconds += time.time() - t0
    return reg


# ---------------------------------------------------------------------------
# brute-force oracle for tiny scenarios


def collins_gisin_coordinates(s: Scenario) -> np.ndarray:
    """Vertices in the ``t``-dimensional Collins-Gisin parametrisation."""
    dig = vertex_digits(s)
    cols = []
    for x in range(s.mA):
        for a in range(s.kA - 1):
            cols.append(dig[:, x] == a)
    for y in range(s.mB):
        for b in range(s.kB - 1):
            cols.append(dig[:, s.mA + y] == b)
    for x in range(s.mA):
        for y in range(s.mB):
            for a in range(s.kA - 1):
                for b in range(s.kB - 1):
                    cols.append((dig[:, x] == a) & (dig[:, s.mA + y] == b))
    return np.stack(cols, axis=1).astype(np.int64)


def _integer_nullvector(M: list[list[int]]) -> Optional[list[int]]:
    """Integer generator of a one-dimensional null space, else None."""
    rows = [[Fraction(v) for v in r] for r in M]
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [u - f * v for u, v in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [Fraction(0)] * ncols
    vec[fc] = Fraction(1)
    for i, c in enumerate(pivots):
        vec[c] = -rows[i][fc]
    den = math.lcm(*(v.denominator for v in vec))
    return [int(v * den) for v in vec]


def bruteforce_facets(s: Scenario, max_dim: int = 10) -> list[AffineSignature]:
    """Every facet of the local polytope by exhaustive hyperplane search (tiny scenarios)."""
    t = s.dimension
    if s.n_vertices > 20 or t > max_dim or t > 10:
        raise TooLarge(f"{s}: {s.n_vertices} vertices, dimension {t} exceeds the brute-force gate")
    P = collins_gisin_coordinates(s)
    nv = P.shape[0]
    H = np.hstack([P, np.ones((nv, 1), dtype=np.int64)])
    found: dict = {}
    for subset in itertools.combinations(range(nv), t):
        sub = H[list(subset)]
        if kernels.rank(sub) != t:
            continue
        h = _integer_nullvector(sub.tolist())
        if h is None:
            continue
        vals = H.dot(np.array(h, dtype=np.int64))
        if (vals >= 0).all():
            pass
        elif (vals <= 0).all():
            vals = -vals
        else:
            continue
        if not (vals > 0).any():
            continue
        # the hyperplane must be spanned by its zero set, not just this subset
        if kernels.rank(H[vals == 0]) != t:
            continue
        sig = _affine_fix_ints(vals + 1, 1)
        found.setdefault(sig.key(), sig)
    return list(found.values())


def group_classes(sigs: Sequence[AffineSignature], s: Scenario) -> list[list[AffineSignature]]:
    classes: list[list[AffineSignature]] = []
    for sig in sigs:
        for cl in classes:
            if equivalent(sig, cl[0], s):
                cl.append(sig)
                break
        else:
            classes.append([sig])
    return classes


def import_representatives(registry: Registry, inequalities: Iterable[BellInequality],
                           source: str = "import") -> list:
    """Classify externally supplied inequalities (non-facets are reported, not inserted)."""
    out = []
    for b in inequalities:
        if not is_facet(b):
            out.append(None)
            continue
        out.append(registry.classify(b, {"source": source}))
    return out
