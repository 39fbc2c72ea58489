"""Hypothesis property suites for the exact LP, signatures, lifting and eta-extension."""

from fractions import Fraction

from hypothesis import given, settings, strategies as st

from bellfacets.detection import (effective_objective, eta_extend, lift_inequality,
                                  liftings)
from bellfacets.exactlp import check_optimality, is_local, solve_local_weight
from bellfacets.facetgen import affine_fix, signature, values_at_vertices
from bellfacets.io import reference_inequality
from bellfacets.scenario import (BellInequality, Distribution, Scenario, apply_relabelling,
                                 enumerate_deterministic, pr_box, relabelling_group)

SMALL = [Scenario(2, 2, 2, 2), Scenario(2, 3, 2, 2), Scenario(3, 3, 2, 2), Scenario(2, 2, 2, 3)]
S2222 = Scenario(2, 2, 2, 2)


@st.composite
def rational_seeds(draw):
    s = draw(st.sampled_from(SMALL))
    nums = draw(st.lists(st.integers(0, 50), min_size=s.n_entries, max_size=s.n_entries))
    den = draw(st.integers(1, 60))
    if not any(nums):
        nums[0] = 1
    return Distribution(s, [Fraction(n, den) for n in nums])


@st.composite
def inequalities(draw):
    s = draw(st.sampled_from(SMALL))
    c = draw(st.lists(st.integers(-5, 5), min_size=s.n_entries, max_size=s.n_entries))
    vals = values_at_vertices(BellInequality(s, c, 0))
    if len(set(vals)) < 2:
        c[0] += 1
    return BellInequality(s, c, 0)


@st.composite
def local_points(draw, s=S2222):
    verts = enumerate_deterministic(s)
    w = draw(st.lists(st.integers(0, 9), min_size=len(verts), max_size=len(verts)))
    if not any(w):
        w[0] = 1
    tot = sum(w)
    entries = [Fraction(0)] * s.n_entries
    for wi, v in zip(w, verts):
        if wi:
            for i, p in enumerate(v.to_distribution().entries):
                entries[i] += Fraction(wi, tot) * p
    return Distribution(s, entries)


@st.composite
def ns_points(draw):
    """Convex mixtures of the PR box and deterministic points (no-signalling, rational)."""
    q = draw(local_points())
    w = Fraction(draw(st.integers(0, 12)), 12)
    return pr_box().mix(q, w)


etas = st.fractions(0, 1, max_denominator=40)


@settings(max_examples=150)
@given(rational_seeds())
def test_strong_duality_and_complementary_slackness(q):
    res = check_optimality(q, solve_local_weight(q))
    assert all(res.values()), res


@settings(max_examples=150)
@given(inequalities(), st.fractions(Fraction(1, 20), 20), st.fractions(-5, 5))
def test_affine_fix_invariance(b, k, shift):
    sig = signature(b)
    assert affine_fix(sig.values) == sig  # idempotent
    assert signature(b.scaled(k, shift)) == sig


@settings(max_examples=60)
@given(inequalities(), st.data())
def test_signature_tally_invariant_under_relabelling(b, data):
    g = relabelling_group(b.scenario)
    r = g[data.draw(st.integers(0, len(g) - 1))]
    assert signature(apply_relabelling(r, b)).tally == signature(b).tally


@settings(max_examples=60)
@given(local_points(), etas)
def test_eta_extension_preserves_locality(q, eta):
    assert is_local(eta_extend(q, eta))


@settings(max_examples=100)
@given(ns_points(), etas, st.integers(0, 15))
def test_effective_objective_equivalence(pi, eta, li):
    b = lift_inequality(reference_inequality("chsh"), liftings(S2222)[li])
    assert effective_objective(b, eta).evaluate(pi) == b.evaluate(eta_extend(pi, eta))


@settings(max_examples=50)
@given(st.integers(0, 15), st.integers(0, 127))
def test_lifted_relabelled_chsh_is_valid(li, gi):
    b = apply_relabelling(relabelling_group(S2222)[gi], reference_inequality("chsh"))
    lifted = lift_inequality(b, liftings(S2222)[li])
    assert min(values_at_vertices(lifted)) >= b.bound


@settings(max_examples=40)
@given(ns_points(), st.integers(1, 6))
def test_locality_threshold_monotone(pi, k):
    eta_lo, eta_hi = Fraction(k, 12), Fraction(k + 6, 12)
    if not is_local(eta_extend(pi, eta_lo)):
        assert not is_local(eta_extend(pi, eta_hi))
