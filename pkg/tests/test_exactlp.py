from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellfacets.errors import Infeasible
from bellfacets.exactlp import (BLAND, DANTZIG, LocalCertificate, check_optimality, dual_bell,
                                is_local, local_weight, solve_local_weight)
from bellfacets.facetgen import values_at_vertices
from bellfacets.scenario import (Distribution, Scenario, enumerate_deterministic,
                                 enumerate_ns_extremal_sa, pr_box, uniform_distribution,
                                 vertex_matrix)

from oracles import local_weight_oracle


def _rational_seed(s, draw_ints):
    return Distribution(s, [Fraction(v, 7) for v in draw_ints])


small = st.sampled_from([Scenario(2, 2, 2, 2), Scenario(2, 3, 2, 2), Scenario(2, 2, 2, 3)])


@st.composite
def seeds(draw):
    s = draw(small)
    ints = draw(st.lists(st.integers(0, 9), min_size=s.n_entries, max_size=s.n_entries))
    if not any(ints):
        ints[0] = 1
    return _rational_seed(s, ints)


def test_pr_box_local_weight_zero():
    assert local_weight(pr_box()) == 0
    assert local_weight(pr_box(), rule=BLAND) == 0


def test_uniform_is_local():
    q = uniform_distribution(Scenario(3, 3, 2, 2))
    assert local_weight(q) == 1 and is_local(q)
    cert = dual_bell(q)
    assert isinstance(cert, LocalCertificate)
    A = vertex_matrix(q.scenario).astype(object)
    assert list(A.dot(np.array(cert.weights, dtype=object))) == list(q.entries)


def test_pr_box_dual_is_chsh_type_facet():
    b = dual_bell(pr_box())
    vals = values_at_vertices(b)
    assert min(vals) == 1 and b.evaluate(pr_box()) < 1


@settings(max_examples=60)
@given(seeds())
def test_agrees_with_independent_oracle(q):
    assert local_weight(q, rule=BLAND) == local_weight_oracle(q)
    assert local_weight(q, rule=DANTZIG) == local_weight_oracle(q)


@settings(max_examples=40)
@given(seeds(), st.integers(0, 10 ** 6))
def test_pivot_ranking_changes_path_not_value(q, key):
    n = q.scenario.n_vertices + q.scenario.n_entries
    prio = np.random.default_rng(key).permutation(n)
    a = solve_local_weight(q)
    b = solve_local_weight(q, priority=prio)
    assert a.primal_value == b.primal_value
    assert all(check_optimality(q, b).values())


def test_warm_start_matches_cold():
    s = Scenario(3, 3, 2, 2)
    seeds_ = enumerate_ns_extremal_sa(s)
    base = solve_local_weight(seeds_[0])
    for q in seeds_[1:]:
        warm = solve_local_weight(q, warm=base)
        assert warm.primal_value == solve_local_weight(q).primal_value
        assert all(check_optimality(q, warm).values())


def test_guided_start_is_exact():
    s = Scenario(3, 3, 2, 2)
    for q in enumerate_ns_extremal_sa(s):
        g = solve_local_weight(q, rule=DANTZIG, guided=True)
        assert g.primal_value == local_weight(q)
        assert all(check_optimality(q, g).values())


def test_guided_locality_matches_plain():
    s = Scenario(3, 3, 2, 2)
    u = uniform_distribution(s)
    for q in enumerate_ns_extremal_sa(s)[:4]:
        for w in (Fraction(1, 3), Fraction(2, 3)):
            m = q.mix(u, w)
            assert is_local(m, guided=True) == is_local(m, guided=False)


def test_negative_seed_rejected():
    s = Scenario(2, 2, 2, 2)
    with pytest.raises(Infeasible):
        solve_local_weight(Distribution(s, [Fraction(-1)] + [Fraction(1, 4)] * 15))


def test_deterministic_point_is_local_with_unit_weight():
    s = Scenario(2, 3, 2, 2)
    v = enumerate_deterministic(s)[11]
    cert = dual_bell(v.to_distribution())
    assert cert.support() == [11]
