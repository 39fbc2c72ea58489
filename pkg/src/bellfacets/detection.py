"""Detection failures: eta-extension, lifted inequalities and threshold searches.

A failed detection is the extra outcome ``N``, placed last in each party's
outcome list. Detectors fail independently with the same efficiency ``eta``.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from ._rational import as_fraction, simplest_between
from .errors import EtaOutOfRange, ShapeMismatch, SnapVerificationFailed
from .exactlp import is_local
from .scenario import (BellInequality, Distribution, Scenario, enumerate_ns_canonical)

log = logging.getLogger(__name__)

LP_PRECISION = Fraction(1, 2 ** 20)
SDP_PRECISION = 1e-4
VERIFY_MARGIN = Fraction(1, 10 ** 6)
SDP_TOLERANCE = 1e-7
CUT_ETA = Fraction(2, 3)
CUT_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# eta-extension


def _check_eta(eta) -> Fraction:
    eta = as_fraction(eta)
    if not 0 <= eta <= 1:
        raise EtaOutOfRange(f"eta must lie in [0, 1], got {eta}")
    return eta


def eta_extend(base: Distribution, eta) -> Distribution:
    """Distribution seen with detection efficiency ``eta`` on both sides."""
    eta = _check_eta(eta)
    s = base.scenario
    e = s.extended()
    NA, NB = s.kA, s.kB
    both, one, none = eta * eta, eta * (1 - eta), (1 - eta) ** 2
    out = [Fraction(0)] * e.n_entries
    for x in range(s.mA):
        for y in range(s.mB):
            for a in range(s.kA):
                for b in range(s.kB):
                    out[e.index(a, b, x, y)] = both * base[a, b, x, y]
                out[e.index(a, NB, x, y)] = one * base.marginal_a(a, x, y)
            for b in range(s.kB):
                out[e.index(NA, b, x, y)] = one * base.marginal_b(b, y, x)
            out[e.index(NA, NB, x, y)] = none
    return Distribution(e, out)


# ---------------------------------------------------------------------------
# liftings


@dataclass(frozen=True)
class Lifting:
    """Outcome that ``N`` copies, per measurement (0-based)."""

    targetA: tuple
    targetB: tuple

    def __str__(self):
        return ",".join(map(str, self.targetA)) + ";" + ",".join(map(str, self.targetB))

    @classmethod
    def parse(cls, text: str) -> "Lifting":
        a, b = text.split(";")
        return cls(tuple(int(v) for v in a.split(",")), tuple(int(v) for v in b.split(",")))


def liftings(s: Scenario) -> list[Lifting]:
    """All ``kA^mA * kB^mB`` liftings, lexicographic."""
    return [Lifting(ta, tb)
            for ta in itertools.product(range(s.kA), repeat=s.mA)
            for tb in itertools.product(range(s.kB), repeat=s.mB)]


def lift_inequality(b: BellInequality, L: Lifting) -> BellInequality:
    """Copy the target outcome's coefficients onto the no-click outcome."""
    s = b.scenario
    if len(L.targetA) != s.mA or len(L.targetB) != s.mB:
        raise ShapeMismatch("lifting does not match the scenario")
    e = s.extended()
    out = [Fraction(0)] * e.n_entries
    for x in range(s.mA):
        for y in range(s.mB):
            for a in range(e.kA):
                for bb in range(e.kB):
                    sa = L.targetA[x] if a == s.kA else a
                    sb = L.targetB[y] if bb == s.kB else bb
                    out[e.index(a, bb, x, y)] = b[sa, sb, x, y]
    return BellInequality(e, out, b.bound)


@dataclass(frozen=True)
class EffectiveObjective:
    """``c . pi + cA . pA + cB . pB + c0``, the lifted value as a function of the base box."""

    scenario: Scenario
    c: tuple
    cA: tuple  # indexed [x][a]
    cB: tuple  # indexed [y][b]
    c0: Fraction

    def evaluate(self, pi: Distribution) -> Fraction:
        s = self.scenario
        v = sum(c * p for c, p in zip(self.c, pi.entries)) + self.c0
        v += sum(self.cA[x][a] * pi.marginal_a(a, x) for x in range(s.mA) for a in range(s.kA))
        v += sum(self.cB[y][b] * pi.marginal_b(b, y) for y in range(s.mB) for b in range(s.kB))
        return v

    def as_joint(self) -> tuple[BellInequality, Fraction]:
        """Fold the marginal terms into joint coefficients via partner measurement 0.

        Exact on no-signalling boxes. Returns the functional and its constant.
        """
        s = self.scenario
        c = list(self.c)
        for x in range(s.mA):
            for a in range(s.kA):
                for b in range(s.kB):
                    c[s.index(a, b, x, 0)] += self.cA[x][a]
        for y in range(s.mB):
            for b in range(s.kB):
                for a in range(s.kA):
                    c[s.index(a, b, 0, y)] += self.cB[y][b]
        return BellInequality(s, c, 0), self.c0


def effective_objective(b_lifted: BellInequality, eta) -> EffectiveObjective:
    eta = _check_eta(eta)
    e = b_lifted.scenario
    s = Scenario(e.mA, e.mB, e.kA - 1, e.kB - 1)
    NA, NB = s.kA, s.kB
    both, one, none = eta * eta, eta * (1 - eta), (1 - eta) ** 2
    c = [both * b_lifted[a, b, x, y] for (a, b, x, y) in map(s.unindex, range(s.n_entries))]
    cA = tuple(tuple(one * sum(b_lifted[a, NB, x, y] for y in range(s.mB)) for a in range(s.kA))
               for x in range(s.mA))
    cB = tuple(tuple(one * sum(b_lifted[NA, b, x, y] for x in range(s.mA)) for b in range(s.kB))
               for y in range(s.mB))
    c0 = none * sum(b_lifted[NA, NB, x, y] for x in range(s.mA) for y in range(s.mB))
    return EffectiveObjective(s, tuple(c), cA, cB, c0)


# ---------------------------------------------------------------------------
# exact-LP thresholds


def is_local_at(q: Distribution, eta) -> bool:
    return is_local(eta_extend(q, eta))


@dataclass
class ThresholdResult:
    value: Fraction
    bracket: tuple
    snapped: bool
    lps: int = 0


def _bisect(local: Callable[[Fraction], bool], lo: Fraction, hi: Fraction, precision: Fraction):
    """Shrink ``[lo, hi]`` (local at lo, non-local at hi) below ``precision``.

    The trial point is the simplest fraction in the middle half of the bracket
    rather than the midpoint: the bracket still shrinks by at least 3/4 per
    step, and small denominators keep the exact LPs in machine integers.
    """
    n = 0
    while hi - lo > precision:
        w = (hi - lo) / 4
        mid = simplest_between(lo + w, hi - w)
        n += 1
        if local(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi, n


def lp_point_threshold(q: Distribution, precision=LP_PRECISION, lo=Fraction(0),
                       hi=Fraction(1)) -> ThresholdResult:
    """Largest ``eta`` at which the eta-extension of ``q`` is local, as an exact fraction.

    ``lo`` must be local and ``hi`` non-local when given. The bracket is snapped
    to its simplest fraction, which must be local while snapped + 1e-6 is not;
    otherwise SnapVerificationFailed carries the raw bracket.
    """
    precision = as_fraction(precision)
    lo, hi = as_fraction(lo), as_fraction(hi)
    test = lambda eta: is_local_at(q, eta)  # noqa: E731
    if hi == 1 and test(Fraction(1)):
        return ThresholdResult(Fraction(1), (Fraction(1), Fraction(1)), True, 1)
    lo, hi, n = _bisect(test, lo, hi, precision)
    snap = simplest_between(lo, hi)
    n += 2
    if test(snap) and not test(min(snap + VERIFY_MARGIN, Fraction(1))):
        return ThresholdResult(snap, (lo, hi), True, n)
    raise SnapVerificationFailed(f"snapped value {snap} failed verification", (lo, hi))


@dataclass
class BoundReport:
    scenario: Scenario
    value: Fraction
    bracket: tuple
    snapped: bool
    seeds: int
    pruned: int
    lps: int
    seconds: float
    argmin: Optional[int] = None


def fundamental_bound(s: Scenario, precision=LP_PRECISION,
                      seeds: Optional[Sequence[Distribution]] = None,
                      progress: Optional[Callable[[int, Fraction], None]] = None) -> BoundReport:
    """Minimum over non-local canonical NS points of their eta threshold.

    A seed already local at the running minimum cannot lower it and is skipped
    after one LP.
    """
    t0 = time.time()
    seeds = enumerate_ns_canonical(s) if seeds is None else list(seeds)
    best, bracket, snapped, arg = Fraction(1), (Fraction(1), Fraction(1)), True, None
    pruned = lps = 0
    for i, q in enumerate(seeds):
        lps += 1
        if is_local_at(q, best):
            pruned += 1
            continue
        try:
            r = lp_point_threshold(q, precision, hi=best)
            value, br, ok = r.value, r.bracket, True
            lps += r.lps
        except SnapVerificationFailed as exc:
            log.warning("seed %d: %s", i, exc)
            value, br, ok = exc.bracket[0], exc.bracket, False
        if value < best:
            best, bracket, snapped, arg = value, br, ok, i
            if progress:
                progress(i, best)
    return BoundReport(s, best, bracket, snapped, len(seeds), pruned, lps, time.time() - t0, arg)


# ---------------------------------------------------------------------------
# SDP thresholds


@dataclass
class SDPThreshold:
    lifting: Lifting
    level: int
    bracket: tuple
    transcript: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.bracket[0]


def sdp_min_value(b_lifted: BellInequality, eta, level: int, solver=None) -> tuple[float, dict]:
    """Minimum of the lifted inequality over the level-``level`` NPA set at efficiency ``eta``."""
    from . import npa

    eff = effective_objective(b_lifted, eta)
    spec = npa.build_moment_structure(eff.scenario, level)
    objective = npa.Objective.from_effective(spec, eff)
    result = npa.solve(spec, objective, solver)
    return result["value"], result


def sdp_lift_threshold(b: BellInequality, L: Lifting, level: int, solver=None,
                       precision: float = SDP_PRECISION, tolerance: float = SDP_TOLERANCE,
                       lo: float = 0.0, hi: float = 1.0) -> SDPThreshold:
    """Bracket ``(lo, hi)`` on the efficiency below which the lifted inequality cannot be violated.

    At each trial efficiency the lifted value is minimised over the NPA set;
    values at or above ``bound - tolerance`` count as local.
    """
    lifted = lift_inequality(b, L)
    transcript = []

    def local(eta: float) -> bool:
        value, res = sdp_min_value(lifted, Fraction(eta), level, solver)
        ok = value >= float(lifted.bound) - tolerance
        transcript.append({"eta": eta, "value": value, "status": res["status"],
                           "primal": res.get("primal"), "dual": res.get("dual"), "local": ok})
        return ok

    if local(hi):
        return SDPThreshold(L, level, (hi, hi), transcript)
    while hi - lo > precision:
        mid = (lo + hi) / 2
        if local(mid):
            lo = mid
        else:
            hi = mid
    return SDPThreshold(L, level, (lo, hi), transcript)


def passes_cut(b: BellInequality, L: Lifting, solver=None, eta=CUT_ETA,
               tolerance: float = CUT_TOLERANCE) -> bool:
    """False when the level-1 minimum at ``eta`` clears the bound by ``tolerance``.

    Such a lifting is strictly local at ``eta`` on every level, so its threshold
    lies above ``eta``. Liftings that touch the bound (threshold exactly ``eta``)
    are kept, since solver noise would otherwise decide them.
    """
    value, _ = sdp_min_value(lift_inequality(b, L), eta, 1, solver)
    return value < float(b.bound) + tolerance


def best_liftings(b: BellInequality, level: int, solver=None, cut=True,
                  candidates: Optional[Iterable[Lifting]] = None,
                  precision: float = SDP_PRECISION) -> list[SDPThreshold]:
    """Thresholds of every lifting surviving the level-1 cut, best first."""
    cands = list(candidates) if candidates is not None else liftings(b.scenario)
    out = []
    for L in cands:
        if cut and not passes_cut(b, L, solver):
            continue
        out.append(sdp_lift_threshold(b, L, level, solver, precision))
    return sorted(out, key=lambda r: r.bracket)
