"""NPA moment matrices, sparse SDP export and solver drivers.

Projectors are symbols ``(party, measurement, outcome)`` with party 0 for Alice
and 1 for Bob. The last outcome of every measurement is eliminated through
``P_{k-1|x} = I - sum_{a<k-1} P_{a|x}``, so generators only use outcomes
``0..k-2``. The moment matrix is real symmetric, which identifies a monomial
with its adjoint.

Exported problems use the sparse SDPA layout:

    minimise  c . x   subject to   sum_i x_i F_i - F_0  >= 0  (PSD)

Block 1 is the moment matrix, block 2 a diagonal block holding every full
probability ``p(ab|xy) >= 0`` (these are not implied by the reduced matrix).
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ParseError, SolverFailed, SolverUnavailable, UnknownVariable
from .scenario import BellInequality, Scenario

log = logging.getLogger(__name__)

Symbol = tuple  # (party, measurement, outcome)
ZERO = None


# ---------------------------------------------------------------------------
# monomials


def _reduce_party(seq) -> Optional[tuple]:
    out = []
    for sym in seq:
        if out and out[-1][1] == sym[1]:
            if out[-1][2] == sym[2]:
                continue
            return ZERO
        out.append(sym)
    return tuple(out)


def canonical(seq) -> Optional[tuple]:
    """Canonical form: Alice block then Bob block, each reduced; ZERO for null products."""
    a = _reduce_party([q for q in seq if q[0] == 0])
    b = _reduce_party([q for q in seq if q[0] == 1])
    if a is ZERO or b is ZERO:
        return ZERO
    return a + b


def adjoint(m: tuple) -> tuple:
    """Reverse each party block (the blocks commute)."""
    a = tuple(q for q in m if q[0] == 0)
    b = tuple(q for q in m if q[0] == 1)
    return a[::-1] + b[::-1]


def canonical_product(u: Optional[tuple], v: Optional[tuple]) -> Optional[tuple]:
    """Canonical form of ``u^dagger v``."""
    if u is ZERO or v is ZERO:
        return ZERO
    return canonical(adjoint(u) + tuple(v))


def real_key(m: tuple) -> tuple:
    """Representative of ``{m, m^dagger}``; both have the same expectation in the real model."""
    return min(m, adjoint(m))


def generators(s: Scenario) -> list:
    return ([(0, x, a) for x in range(s.mA) for a in range(s.kA - 1)]
            + [(1, y, b) for y in range(s.mB) for b in range(s.kB - 1)])


def build_operator_set(s: Scenario, n: int) -> list:
    """Identity plus canonical non-null monomials of length <= n, by length then lexicographic."""
    if n < 0:
        raise ValueError("level must be >= 0")
    gens = generators(s)
    found = {()}
    frontier = {()}
    for _ in range(n):
        nxt = set()
        for m in frontier:
            for g in gens:
                c = canonical(m + (g,))
                if c is not ZERO and c not in found:
                    nxt.add(c)
        found |= nxt
        frontier = nxt
    return sorted(found, key=lambda m: (len(m), m))


def monomial_str(m: Optional[tuple]) -> str:
    if m is ZERO:
        return "0"
    if not m:
        return "I"
    return " ".join(f"{'AB'[p]}{o + 1}|{x + 1}" for p, x, o in m)


# ---------------------------------------------------------------------------
# moment structure


@dataclass
class Variable:
    kind: str  # probability | marginalA | marginalB | free
    label: tuple
    monomial: tuple


@dataclass
class MomentMatrixSpec:
    scenario: Scenario
    level: int
    operators: list
    entry: np.ndarray  # variable id per entry, -1 where fixed
    fixed: dict  # (i, j) -> Fraction, upper triangle i <= j
    variables: list
    lookup: dict = field(repr=False)  # real_key(monomial) -> variable id

    @property
    def size(self) -> int:
        return len(self.operators)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def expectation(self, m: tuple) -> tuple[dict, Fraction]:
        """Expectation of a canonical monomial as ``({var: coeff}, constant)``."""
        if m is ZERO:
            return {}, Fraction(0)
        if not m:
            return {}, Fraction(1)
        try:
            return {self.lookup[real_key(m)]: Fraction(1)}, Fraction(0)
        except KeyError:
            raise UnknownVariable(f"monomial {monomial_str(m)} is not in the moment matrix") from None

    def _projector(self, party: int, meas: int, out: int, k: int) -> list:
        """``P_{out|meas}`` as a signed combination of monomials over reduced outcomes."""
        if out < k - 1:
            return [(1, ((party, meas, out),))]
        return [(1, ())] + [(-1, ((party, meas, o),)) for o in range(k - 1)]

    def _combine(self, terms) -> tuple[dict, Fraction]:
        coeffs, const = {}, Fraction(0)
        for w, m in terms:
            d, c = self.expectation(canonical(m))
            const += w * c
            for v, cv in d.items():
                coeffs[v] = coeffs.get(v, 0) + w * cv
        return {v: c for v, c in coeffs.items() if c}, const

    def probability(self, a: int, b: int, x: int, y: int) -> tuple[dict, Fraction]:
        s = self.scenario
        terms = [(wa * wb, ma + mb)
                 for wa, ma in self._projector(0, x, a, s.kA)
                 for wb, mb in self._projector(1, y, b, s.kB)]
        return self._combine(terms)

    def marginal_a(self, a: int, x: int) -> tuple[dict, Fraction]:
        return self._combine(self._projector(0, x, a, self.scenario.kA))

    def marginal_b(self, b: int, y: int) -> tuple[dict, Fraction]:
        return self._combine(self._projector(1, y, b, self.scenario.kB))


def _kind(m: tuple):
    if len(m) == 1:
        p, x, o = m[0]
        return ("marginalA", (o, x)) if p == 0 else ("marginalB", (o, x))
    if len(m) == 2 and m[0][0] == 0 and m[1][0] == 1:
        return "probability", (m[0][2], m[1][2], m[0][1], m[1][1])
    return "free", ()


def build_moment_structure(s: Scenario, n: int) -> MomentMatrixSpec:
    if n < 1:
        raise ValueError("level must be >= 1")
    ops = build_operator_set(s, n)
    size = len(ops)
    entry = np.full((size, size), -1, dtype=np.int64)
    fixed = {}
    variables, lookup = [], {}
    for i in range(size):
        for j in range(i, size):
            m = canonical_product(ops[i], ops[j])
            if m is ZERO:
                fixed[i, j] = Fraction(0)
                continue
            if not m:
                fixed[i, j] = Fraction(1)
                continue
            key = real_key(m)
            vid = lookup.get(key)
            if vid is None:
                vid = lookup[key] = len(variables)
                kind, label = _kind(key)
                variables.append(Variable(kind, label, key))
            entry[i, j] = entry[j, i] = vid
    return MomentMatrixSpec(s, n, ops, entry, fixed, variables, lookup)


# ---------------------------------------------------------------------------
# objectives


@dataclass
class Objective:
    """Linear functional ``sum coeffs[v] x_v + constant`` over spec variables."""

    coeffs: dict
    constant: Fraction = Fraction(0)

    def check(self, spec: MomentMatrixSpec):
        for v in self.coeffs:
            if not (isinstance(v, (int, np.integer)) and 0 <= v < spec.n_variables):
                raise UnknownVariable(f"objective references unknown variable {v!r}")

    @staticmethod
    def _accumulate(acc: dict, const, weight, expr) -> Fraction:
        d, c = expr
        for v, cv in d.items():
            acc[v] = acc.get(v, 0) + weight * cv
        return const + weight * c

    @classmethod
    def from_inequality(cls, spec: MomentMatrixSpec, b: BellInequality) -> "Objective":
        s = spec.scenario
        if b.scenario != s:
            raise UnknownVariable("inequality scenario differs from the moment matrix scenario")
        acc, const = {}, Fraction(0)
        for i, w in enumerate(b.entries):
            if w:
                const = cls._accumulate(acc, const, w, spec.probability(*s.unindex(i)))
        return cls({v: c for v, c in acc.items() if c}, const)

    @classmethod
    def from_effective(cls, spec: MomentMatrixSpec, eff) -> "Objective":
        s = spec.scenario
        acc, const = {}, Fraction(eff.c0)
        for i, w in enumerate(eff.c):
            if w:
                const = cls._accumulate(acc, const, w, spec.probability(*s.unindex(i)))
        for x in range(s.mA):
            for a in range(s.kA):
                if eff.cA[x][a]:
                    const = cls._accumulate(acc, const, eff.cA[x][a], spec.marginal_a(a, x))
        for y in range(s.mB):
            for b in range(s.kB):
                if eff.cB[y][b]:
                    const = cls._accumulate(acc, const, eff.cB[y][b], spec.marginal_b(b, y))
        return cls({v: c for v, c in acc.items() if c}, const)


# ---------------------------------------------------------------------------
# sparse SDPA files


def _num(v) -> str:
    return format(float(v), ".17g")


@dataclass
class SDPProblem:
    """Parsed sparse SDPA problem: ``F[k]`` maps ``(block, i, j)`` to a value (1-based)."""

    m: int
    block_sizes: list
    c: list
    F: list

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)


def to_problem(spec: MomentMatrixSpec, objective: Objective, sense: str = "min") -> SDPProblem:
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    objective.check(spec)
    sign = 1 if sense == "min" else -1
    s = spec.scenario
    m = spec.n_variables
    F = [dict() for _ in range(m + 1)]
    # F_0 = -(fixed part) so that sum x_i F_i - F_0 is the moment matrix
    for (i, j), v in sorted(spec.fixed.items()):
        if v:
            F[0][1, i + 1, j + 1] = -v
    for i in range(spec.size):
        for j in range(i, spec.size):
            vid = int(spec.entry[i, j])
            if vid >= 0:
                key = (1, i + 1, j + 1)
                F[vid + 1][key] = F[vid + 1].get(key, 0) + 1
    for r in range(s.n_entries):
        d, const = spec.probability(*s.unindex(r))
        if const:
            F[0][2, r + 1, r + 1] = -const
        for v, cv in d.items():
            F[v + 1][2, r + 1, r + 1] = cv
    c = [sign * objective.coeffs.get(v, 0) for v in range(m)]
    return SDPProblem(m, [spec.size, -s.n_entries], c, F)


def write_sdpa(p: SDPProblem, comment: str = "") -> str:
    lines = []
    if comment:
        lines.extend(f"* {ln}" for ln in comment.splitlines())
    lines.append(str(p.m))
    lines.append(str(p.n_blocks))
    lines.append(" ".join(str(b) for b in p.block_sizes))
    lines.append(" ".join(_num(v) for v in p.c))
    for k, Fk in enumerate(p.F):
        for (blk, i, j), v in sorted(Fk.items()):
            if v:
                lines.append(f"{k} {blk} {i} {j} {_num(v)}")
    return "\n".join(lines) + "\n"


def export_sdp(spec: MomentMatrixSpec, objective: Objective, sense: str = "min") -> str:
    """Sparse SDPA text of the relaxation; the objective constant is kept out of the file."""
    s = spec.scenario
    head = (f"bellfacets NPA level {spec.level} scenario {s}\n"
            f"sense {sense} constant {_num(objective.constant)}")
    return write_sdpa(to_problem(spec, objective, sense), head)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_sdpa(text: str) -> SDPProblem:
    """Read the sparse SDPA layout written by :func:`write_sdpa` (and by other tools)."""
    body = [ln for ln in text.splitlines() if ln.strip() and ln.lstrip()[0] not in "*\""]
    try:
        tokens = re.sub(r"[,(){}]", " ", "\n".join(body[:4])).split()
        m = int(tokens[0])
        nb = int(tokens[1])
        sizes = [int(t) for t in tokens[2:2 + nb]]
        c = [float(t) for t in tokens[2 + nb:2 + nb + m]]
        if len(sizes) != nb or len(c) != m or m < 0 or nb < 1:
            raise ValueError("header is incomplete")
        rest = tokens[2 + nb + m:] + re.sub(r"[,(){}]", " ", "\n".join(body[4:])).split()
        if len(rest) % 5:
            raise ValueError("entry lines must have five fields")
        F = [dict() for _ in range(m + 1)]
        for q in range(0, len(rest), 5):
            k, blk, i, j = (int(t) for t in rest[q:q + 4])
            v = float(rest[q + 4])
            if not (0 <= k <= m and 1 <= blk <= nb and 1 <= i <= abs(sizes[blk - 1])
                    and 1 <= j <= abs(sizes[blk - 1])):
                raise ValueError(f"entry out of range: {rest[q:q + 5]}")
            if i > j:
                i, j = j, i
            F[k][blk, i, j] = v
    except (ValueError, IndexError) as exc:
        raise ParseError(f"not a sparse SDPA file: {exc}", text) from None
    return SDPProblem(m, sizes, c, F)


# ---------------------------------------------------------------------------
# solvers


@dataclass(frozen=True)
class SolverProfile:
    """How to call a solver and read its report.

    ``min_side`` names which reported objective is the minimum of ``c . x``:
    SDPA reports it as the primal, CSDP (opposite sign convention) as the dual.
    """

    name: str
    args: tuple  # argument template, {input} and {output} substituted
    primal: str
    dual: str
    status: str
    optimal: tuple
    inaccurate: tuple
    min_side: str = "primal"
    negate: bool = False
    reads_output: bool = True


PROFILES = {
    "sdpa": SolverProfile(
        "sdpa", ("{input}", "{output}"),
        primal=r"objValPrimal\s*=\s*(" + _NUM + ")", dual=r"objValDual\s*=\s*(" + _NUM + ")",
        status=r"phase\.value\s*=\s*(\w+)", optimal=("pdOPT",), inaccurate=("pFEAS", "dFEAS", "pdFEAS")),
    "csdp": SolverProfile(
        "csdp", ("{input}", "{output}"),
        primal=r"Primal objective value:\s*(" + _NUM + ")",
        dual=r"Dual objective value:\s*(" + _NUM + ")",
        status=r"^(Success|Partial Success|Failure)", optimal=("Success",),
        inaccurate=("Partial Success",), min_side="dual", negate=True, reads_output=False),
    "bridge": SolverProfile(
        "bridge", ("{input}",),
        primal=r"objValPrimal\s*=\s*(" + _NUM + ")", dual=r"objValDual\s*=\s*(" + _NUM + ")",
        status=r"phase\.value\s*=\s*(\w+)", optimal=("pdOPT",), inaccurate=("pdFEAS",),
        reads_output=False),
}


@dataclass(frozen=True)
class SolverConfig:
    """``path`` is an executable, or ``"inprocess"`` / ``"bridge"`` for the bundled cvxpy route."""

    path: str = "inprocess"
    profile: str = "sdpa"
    timeout: float = 3600.0
    retries: int = 1

    @classmethod
    def from_env(cls, path: Optional[str] = None, profile: Optional[str] = None) -> "SolverConfig":
        path = path or os.environ.get("SDP_SOLVER") or "inprocess"
        if profile is None:
            base = os.path.basename(path).lower()
            profile = ("csdp" if "csdp" in base else "bridge" if path == "bridge" else "sdpa")
        return cls(path, profile)

    def command(self, inp: str, out: str) -> list:
        prof = PROFILES[self.profile]
        args = [a.format(input=inp, output=out) for a in prof.args]
        if self.path == "bridge":
            return [sys.executable, "-m", "bellfacets.sdp_bridge"] + args
        return shlex.split(self.path) + args


def _first(pattern: str, text: str):
    m = re.search(pattern, text, re.MULTILINE)
    return m.group(1) if m else None


def parse_report(text: str, profile: Union[str, SolverProfile]) -> dict:
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    p, d, st = _first(prof.primal, text), _first(prof.dual, text), _first(prof.status, text)
    if p is None or d is None:
        raise ParseError(f"no objective values in {prof.name} output", text)
    primal, dual = float(p), float(d)
    if prof.negate:
        primal, dual = -primal, -dual
    if prof.min_side == "dual":
        primal, dual = dual, primal
    if st in prof.optimal:
        status = "optimal"
    elif st in prof.inaccurate:
        status = "inaccurate"
    else:
        status = "failed"
    return {"status": status, "primal": primal, "dual": dual, "raw_status": st}


def solve_external(path: Union[str, Path], config: Optional[SolverConfig] = None) -> dict:
    """Run a solver on a sparse SDPA file; objectives refer to ``min c . x``."""
    config = config or SolverConfig.from_env()
    path = str(path)
    if config.path == "inprocess":
        from .sdp_bridge import solve_problem
        with open(path) as fh:
            res = solve_problem(parse_sdpa(fh.read()))
        return {k: res[k] for k in ("status", "primal", "dual")}
    prof = PROFILES[config.profile]
    with tempfile.TemporaryDirectory(prefix="bellfacets-sdp-") as tmp:
        out = os.path.join(tmp, "solution.out")
        cmd = config.command(path, out)
        last = None
        for attempt in range(config.retries + 1):
            try:
                proc = subprocess.run(cmd, capture_output=True, text=True, timeout=config.timeout)
            except FileNotFoundError:
                raise SolverUnavailable(f"SDP solver not found: {cmd[0]}") from None
            except subprocess.TimeoutExpired:
                raise SolverFailed("timeout", f"solver exceeded {config.timeout}s") from None
            last = proc
            if proc.returncode == 0:
                break
            log.warning("solver exited with %d (attempt %d)", proc.returncode, attempt + 1)
        text = last.stdout
        if prof.reads_output and os.path.exists(out):
            with open(out) as fh:
                text = fh.read() + "\n" + text
        if last.returncode != 0 and _first(prof.primal, text) is None:
            raise SolverFailed(last.returncode, last.stderr.strip() or "solver failed")
        return parse_report(text, prof)


def solve(spec: MomentMatrixSpec, objective: Objective, solver: Optional[SolverConfig] = None,
          sense: str = "min") -> dict:
    """Optimise the objective over the relaxation; ``value`` includes the constant."""
    solver = solver or SolverConfig.from_env()
    if solver.path == "inprocess":
        from .sdp_bridge import solve_problem
        res = solve_problem(to_problem(spec, objective, sense))
    else:
        with tempfile.TemporaryDirectory(prefix="bellfacets-npa-") as tmp:
            f = os.path.join(tmp, "problem.dat-s")
            with open(f, "w", newline="\n") as fh:
                fh.write(export_sdp(spec, objective, sense))
            res = solve_external(f, solver)
    if res["status"] == "failed":
        raise SolverFailed(res.get("raw_status", "failed"))
    sign = 1 if sense == "min" else -1
    value = sign * res["primal"] + float(objective.constant)
    return dict(res, value=value)
