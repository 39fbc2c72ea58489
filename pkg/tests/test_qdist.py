import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellfacets.errors import InvalidScenario
from bellfacets.exactlp import dual_bell, local_weight
from bellfacets.facetgen import equivalent, is_facet, signature, values_at_vertices
from bellfacets.qdist import (quantum_distribution, rationalize, run_search_quantum,
                              sample_quantum)
from bellfacets.scenario import (BellInequality, Scenario, is_no_signalling,
                                 pr_box, uniform_distribution)

S2233 = Scenario(2, 2, 3, 3)


def _block_sums(q):
    s = q.scenario
    return [sum(q[a, b, x, y] for a in range(s.kA) for b in range(s.kB))
            for x in range(s.mA) for y in range(s.mB)]


def test_maximally_entangled_computational_basis():
    s = S2233
    I3 = np.eye(3, dtype=complex)
    q = quantum_distribution(s, [1 / math.sqrt(3)] * 3, [I3, I3], [I3, I3])
    for i in range(s.n_entries):
        a, b, x, y = s.unindex(i)
        assert q.entries[i] == pytest.approx((a == b) / 3, abs=1e-15)


def test_product_state_is_local():
    # rounding is exact in the computational basis, so the local weight is exactly 1
    I3 = np.eye(3, dtype=complex)
    F = np.fft.fft(np.eye(3)) / math.sqrt(3)
    q = quantum_distribution(S2233, [1, 0, 0], [I3, F], [F, I3])
    assert local_weight(rationalize(q, 9 * 10 ** 12)) == 1


def test_product_state_random_bases_local_up_to_rounding():
    # generic bases: rounding breaks no-signalling by about 1/D, and the deficit stays that small
    D = 10 ** 12
    for seed in range(5):
        smp = sample_quantum(S2233, seed)
        q = quantum_distribution(S2233, [1, 0, 0], smp.unitariesA, smp.unitariesB)
        w = local_weight(rationalize(q, D))
        assert 1 - Fraction(S2233.n_entries, D) <= w <= 1


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32), st.sampled_from([S2233, Scenario(3, 3, 3, 3), Scenario(2, 3, 2, 2)]))
def test_sample_invariants(seed, s):
    if s.kA != s.kB:
        return
    smp = sample_quantum(s, seed)
    assert np.sum(smp.schmidt ** 2) == pytest.approx(1, abs=1e-12)
    assert (smp.schmidt >= 0).all()
    assert smp.unitarity_residual() <= 1e-12
    assert is_no_signalling(smp.distribution)
    assert all(abs(t - 1) <= 1e-12 for t in _block_sums(smp.distribution))


def test_residuals_over_many_samples():
    worst_u = worst_ns = 0.0
    s = Scenario(2, 2, 3, 3)
    for seed in range(10000):
        smp = sample_quantum(s, seed)
        worst_u = max(worst_u, smp.unitarity_residual())
        q = smp.distribution
        for x in range(2):
            for a in range(3):
                worst_ns = max(worst_ns, abs(q.marginal_a(a, x, 0) - q.marginal_a(a, x, 1)))
    assert worst_u <= 1e-12 and worst_ns <= 1e-9


def test_seeded_determinism():
    a, b = sample_quantum(S2233, 42), sample_quantum(S2233, 42)
    assert a.to_json() == b.to_json()
    assert a.to_json() != sample_quantum(S2233, 43).to_json()
    d = json.loads(a.to_json())
    assert d["seed"] == 42 and len(d["unitariesA"]) == 2


def test_non_square_rejected():
    with pytest.raises(InvalidScenario):
        sample_quantum(Scenario(2, 2, 2, 3), 0)
    with pytest.raises(InvalidScenario):
        run_search_quantum(Scenario(2, 2, 2, 2), 1)


def test_rationalize_exact_and_normalized():
    q = pr_box()
    assert rationalize(q) == q
    u = uniform_distribution(S2233)
    assert rationalize(u, 9) == u
    r = rationalize(sample_quantum(S2233, 3).distribution, 1000)
    assert all(t == 1 for t in _block_sums(r))
    assert all(v.denominator in (1, 2, 4, 5, 8, 10, 20, 25, 40, 50, 100, 125, 200, 250, 500, 1000)
               for v in r.entries)


def test_dual_of_rationalized_sample_is_valid():
    s = Scenario(3, 3, 3, 3)
    found = 0
    for seed in range(6):
        q = rationalize(sample_quantum(s, seed).distribution)
        b = dual_bell(q)
        if isinstance(b, BellInequality):
            found += 1
            assert min(values_at_vertices(b)) >= 1
            assert b.evaluate(q) < 1
    assert found


def test_quantum_search_finds_chsh_lift():
    from bellfacets.detection import Lifting, lift_inequality
    from bellfacets.io import reference_inequality

    s = Scenario(3, 3, 3, 3)
    reg = run_search_quantum(s, 3, seed=0)
    chsh = lift_inequality(reference_inequality("chsh"), Lifting((0, 0), (0, 0)))
    out = [Fraction(0)] * s.n_entries
    for i in range(chsh.scenario.n_entries):
        a, b, x, y = chsh.scenario.unindex(i)
        out[s.index(a, b, x, y)] = chsh.entries[i]
    padded = BellInequality(s, out, 1)
    assert is_facet(padded)
    assert any(equivalent(signature(padded), r.signature, s) for r in reg)
    for r in reg:
        assert is_facet(r.representative)
    assert reg.report.lps == 3
