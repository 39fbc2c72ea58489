import math
import stat
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellfacets import npa
from bellfacets.detection import effective_objective, lift_inequality, Lifting
from bellfacets.errors import ParseError, SolverUnavailable, UnknownVariable
from bellfacets.io import reference_inequality
from bellfacets.qdist import sample_quantum
from bellfacets.scenario import Scenario

from oracles import tsirelson_box

S2222 = Scenario(2, 2, 2, 2)


def test_level1_chsh_structure():
    spec = npa.build_moment_structure(S2222, 1)
    assert spec.size == 5 and spec.n_variables == 10
    assert [npa.monomial_str(o) for o in spec.operators] == ["I", "A1|1", "A1|2", "B1|1", "B1|2"]
    kinds = sorted(v.kind for v in spec.variables)
    assert kinds.count("marginalA") == 2 and kinds.count("marginalB") == 2
    assert kinds.count("probability") == 4 and kinds.count("free") == 2
    assert spec.fixed == {(0, 0): 1}
    # projector idempotence puts the marginals on the diagonal
    for i in range(1, 5):
        assert spec.entry[i, i] == spec.entry[0, i]


@settings(max_examples=20)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(2, 4), st.integers(2, 4))
def test_level1_operator_count(mA, mB, kA, kB):
    s = Scenario(mA, mB, kA, kB)
    assert len(npa.build_operator_set(s, 1)) == 1 + mA * (kA - 1) + mB * (kB - 1)


def test_level2_size():
    assert npa.build_moment_structure(S2222, 2).size == 13


def test_canonical_rules():
    a1, a2 = (0, 0, 0), (0, 0, 1)
    b1 = (1, 0, 0)
    assert npa.canonical((a1, a1)) == (a1,)
    assert npa.canonical((a1, a2)) is npa.ZERO
    assert npa.canonical((b1, a1)) == (a1, b1)
    assert npa.adjoint(((0, 0, 0), (0, 1, 0), (1, 0, 0))) == ((0, 1, 0), (0, 0, 0), (1, 0, 0))


def test_unknown_variable():
    spec = npa.build_moment_structure(S2222, 1)
    with pytest.raises(UnknownVariable):
        spec.expectation(((0, 0, 0), (0, 1, 0), (0, 0, 0)))
    with pytest.raises(UnknownVariable):
        npa.Objective({99: 1}).check(spec)


def _projectors(theta):
    v = np.array([math.cos(theta), math.sin(theta)])
    P = np.outer(v, v)
    return P


def _realised_moments(spec, state, projA, projB):
    """Moment matrix of an explicit real strategy; ``projX[meas][out]`` are 2x2 projectors."""
    I2 = np.eye(2)

    def op(m):
        M = np.eye(4)
        for p, x, o in m:
            M = M @ (np.kron(projA[x][o], I2) if p == 0 else np.kron(I2, projB[x][o]))
        return M

    ops = [op(m) for m in spec.operators]
    return np.array([[state @ A.T @ B @ state for B in ops] for A in ops])


@pytest.mark.parametrize("level", [1, 2])
def test_structure_matches_realised_strategy(level):
    spec = npa.build_moment_structure(S2222, level)
    state = np.array([1, 0, 0, 1]) / math.sqrt(2)
    angA = [0, math.pi / 4]
    angB = [math.pi / 8, -math.pi / 8]
    projA = [[_projectors(t), np.eye(2) - _projectors(t)] for t in angA]
    projB = [[_projectors(t), np.eye(2) - _projectors(t)] for t in angB]
    G = _realised_moments(spec, state, projA, projB)
    values = {}
    for i in range(spec.size):
        for j in range(spec.size):
            v = int(spec.entry[i, j])
            if v < 0:
                key = (min(i, j), max(i, j))
                assert G[i, j] == pytest.approx(float(spec.fixed[key]), abs=1e-12)
            else:
                values.setdefault(v, G[i, j])
                assert G[i, j] == pytest.approx(values[v], abs=1e-12)
    assert np.linalg.eigvalsh(G).min() > -1e-12
    # objectives evaluated on the realised moments equal B . p
    b = reference_inequality("chsh")
    obj = npa.Objective.from_inequality(spec, b)
    x = np.array([values[v] for v in range(spec.n_variables)])
    p = [float(state @ np.kron(projA[xx][a], projB[yy][bb]) @ state)
         for (a, bb, xx, yy) in map(S2222.unindex, range(16))]
    assert sum(float(c) * x[v] for v, c in obj.coeffs.items()) + float(obj.constant) == \
        pytest.approx(sum(float(c) * q for c, q in zip(b.entries, p)), abs=1e-12)


def test_sdpa_roundtrip():
    spec = npa.build_moment_structure(S2222, 1)
    obj = npa.Objective.from_inequality(spec, reference_inequality("chsh"))
    text = npa.export_sdp(spec, obj)
    assert text.startswith("* bellfacets NPA level 1")
    p = npa.parse_sdpa(text)
    q = npa.to_problem(spec, obj)
    assert p.m == q.m == spec.n_variables and p.block_sizes == [5, -16]
    assert p.c == [float(v) for v in q.c]
    assert p.F == [{k: float(v) for k, v in Fk.items() if v} for Fk in q.F]
    assert npa.write_sdpa(p) == npa.write_sdpa(npa.parse_sdpa(npa.write_sdpa(p)))


@pytest.mark.parametrize("text", ["", "3\n1\n2\n1 2\n", "1\n1\n2\n1\n0 1 1 1\n",
                                  "1\n1\n2\n1\n0 1 3 1 1.0\n"])
def test_sdpa_parse_errors(text):
    with pytest.raises(ParseError):
        npa.parse_sdpa(text)


def test_parse_reports():
    r = npa.parse_report("phase.value = pdOPT\nobjValPrimal = 1.5\nobjValDual = 1.4999\n", "sdpa")
    assert r["status"] == "optimal" and r["primal"] == 1.5
    r = npa.parse_report("Success: SDP solved\nPrimal objective value: -1.0\n"
                         "Dual objective value: -1.1\n", "csdp")
    assert r["status"] == "optimal" and r["primal"] == 1.1 and r["dual"] == 1.0
    with pytest.raises(ParseError):
        npa.parse_report("nothing here", "sdpa")


def test_missing_solver_is_reported():
    spec = npa.build_moment_structure(S2222, 1)
    obj = npa.Objective.from_inequality(spec, reference_inequality("chsh"))
    cfg = npa.SolverConfig("/nonexistent/sdpa-binary", "sdpa")
    with pytest.raises(SolverUnavailable):
        npa.solve(spec, obj, cfg)


def test_external_solver_retry(tmp_path):
    """A fake solver that fails once, then prints an SDPA report into the output file."""
    marker = tmp_path / "ran"
    script = tmp_path / "fake-sdpa"
    script.write_text(
        f"#!{sys.executable}\n"
        "import os, sys\n"
        f"m = {str(marker)!r}\n"
        "if not os.path.exists(m):\n"
        "    open(m, 'w').close(); sys.exit(1)\n"
        "open(sys.argv[2], 'w').write('phase.value = pdOPT\\nobjValPrimal = 0.25\\nobjValDual = 0.25\\n')\n")
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    spec = npa.build_moment_structure(S2222, 1)
    obj = npa.Objective.from_inequality(spec, reference_inequality("chsh"))
    res = npa.solve(spec, obj, npa.SolverConfig(str(script), "sdpa"))
    assert res["status"] == "optimal" and res["value"] == pytest.approx(0.25 + float(obj.constant))


@pytest.mark.solver
@pytest.mark.parametrize("level", [1, 2])
def test_chsh_minimum_is_tsirelson_value(level):
    from bellfacets.scenario import apply_relabelling, relabelling_group
    b = reference_inequality("chsh")
    spec = npa.build_moment_structure(S2222, level)
    res = npa.solve(spec, npa.Objective.from_inequality(spec, b))
    t = tsirelson_box()
    best = min(sum(float(c) * p for c, p in zip(b.entries, apply_relabelling(g, t).entries))
               for g in relabelling_group(S2222))
    assert res["value"] == pytest.approx(best, abs=1e-6)
    assert best == pytest.approx(2 - math.sqrt(2), abs=1e-12)


@pytest.mark.solver
def test_bridge_matches_inprocess(tmp_path):
    spec = npa.build_moment_structure(S2222, 1)
    eff = effective_objective(lift_inequality(reference_inequality("chsh"), Lifting((0, 1), (0, 0))),
                              Fraction(7, 10))
    obj = npa.Objective.from_effective(spec, eff)
    a = npa.solve(spec, obj, npa.SolverConfig("inprocess"))
    b = npa.solve(spec, obj, npa.SolverConfig("bridge", "bridge"))
    assert a["value"] == pytest.approx(b["value"], abs=1e-6)
    assert abs(a["primal"] - a["dual"]) < 1e-5


@pytest.mark.solver
def test_quantum_samples_lie_inside_level1():
    spec = npa.build_moment_structure(S2222, 1)
    b = reference_inequality("chsh")
    lo = npa.solve(spec, npa.Objective.from_inequality(spec, b))["value"]
    hi = npa.solve(spec, npa.Objective.from_inequality(spec, b), sense="max")["value"]
    for seed in range(30):
        q = sample_quantum(S2222, seed).distribution
        v = sum(float(c) * p for c, p in zip(b.entries, q.entries))
        assert lo - 1e-6 <= v <= hi + 1e-6
