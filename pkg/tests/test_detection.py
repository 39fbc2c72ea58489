from fractions import Fraction

import pytest

from bellfacets.detection import (EffectiveObjective, Lifting, _bisect, effective_objective,
                                  eta_extend, fundamental_bound, is_local_at, lift_inequality,
                                  liftings, lp_point_threshold)
from bellfacets.errors import EtaOutOfRange, ShapeMismatch, SnapVerificationFailed
from bellfacets.facetgen import is_facet, values_at_vertices
from bellfacets.io import reference_inequality
from bellfacets.scenario import (Scenario, enumerate_deterministic, is_no_signalling, pr_box,
                                 uniform_distribution)

S2222 = Scenario(2, 2, 2, 2)


def test_eta_extend_shapes_and_limits():
    q = pr_box()
    e1 = eta_extend(q, 1)
    s3 = S2222.extended()
    assert e1.scenario == s3
    assert all(e1[a, b, x, y] == q[a, b, x, y] for (a, b, x, y) in map(S2222.unindex, range(16)))
    e0 = eta_extend(q, 0)
    assert all(e0[2, 2, x, y] == 1 for x in range(2) for y in range(2))
    half = eta_extend(q, Fraction(1, 2))
    assert half.is_normalized() and is_no_signalling(half)


@pytest.mark.parametrize("eta", [-Fraction(1, 10), Fraction(11, 10)])
def test_eta_out_of_range(eta):
    with pytest.raises(EtaOutOfRange):
        eta_extend(pr_box(), eta)


def test_lifting_parse_and_count():
    L = Lifting.parse("0,1;1,0")
    assert L == Lifting((0, 1), (1, 0)) and str(L) == "0,1;1,0"
    assert len(liftings(S2222)) == 16
    assert len(liftings(Scenario(3, 3, 2, 2))) == 64


def test_lifted_facets_stay_facets():
    b = reference_inequality("chsh")
    for L in liftings(S2222):
        lifted = lift_inequality(b, L)
        assert lifted.scenario == S2222.extended()
        assert min(values_at_vertices(lifted)) == 1
        assert is_facet(lifted)


def test_lifting_shape_checked():
    with pytest.raises(ShapeMismatch):
        lift_inequality(reference_inequality("chsh"), Lifting((0,), (0, 0)))


def test_effective_objective_matches_lifted_value():
    b = lift_inequality(reference_inequality("chsh"), Lifting((0, 1), (1, 1)))
    for eta in (Fraction(0), Fraction(1, 3), Fraction(2, 3), Fraction(1)):
        eff = effective_objective(b, eta)
        assert isinstance(eff, EffectiveObjective)
        for q in (pr_box(), uniform_distribution(S2222)):
            assert eff.evaluate(q) == b.evaluate(eta_extend(q, eta))
            joint, c0 = eff.as_joint()
            assert joint.evaluate(q) + c0 == eff.evaluate(q)


def test_bisect_reaches_precision_with_small_denominators():
    target = Fraction(5, 7)
    lo, hi, n = _bisect(lambda e: e <= target, Fraction(0), Fraction(1), Fraction(1, 2 ** 20))
    assert lo <= target < hi and hi - lo <= Fraction(1, 2 ** 20)
    assert n <= 50


def test_pr_box_threshold_two_thirds():
    r = lp_point_threshold(pr_box())
    assert r.value == Fraction(2, 3) and r.snapped
    assert is_local_at(pr_box(), Fraction(2, 3))
    assert not is_local_at(pr_box(), Fraction(2, 3) + Fraction(1, 10 ** 6))


def test_local_point_threshold_one():
    v = enumerate_deterministic(S2222)[3].to_distribution()
    assert lp_point_threshold(v).value == 1


def test_snap_failure_reports_bracket():
    # precision too coarse for the snap to land on 2/3 exactly
    with pytest.raises(SnapVerificationFailed) as exc:
        lp_point_threshold(pr_box(), precision=Fraction(1, 3))
    lo, hi = exc.value.bracket
    assert lo <= Fraction(2, 3) <= hi


def test_fundamental_bound_2222_and_3322():
    r = fundamental_bound(S2222)
    assert r.value == Fraction(2, 3) and r.snapped
    r = fundamental_bound(Scenario(3, 3, 2, 2))
    assert r.value == Fraction(4, 7) and r.snapped and r.pruned > 0
