import json
from fractions import Fraction

import pytest

from bellfacets import io
from bellfacets.errors import ParseError
from bellfacets.facetgen import InequalityClassRecord, Registry, run_search, signature
from bellfacets.scenario import BellInequality, Scenario, pr_box

S2222 = Scenario(2, 2, 2, 2)


def test_fnv1a64_vectors():
    assert io.fnv1a64(b"") == 0xcbf29ce484222325
    assert io.fnv1a64(b"a") == 0xaf63dc4c8601ec8c
    assert io.fnv1a64(b"foobar") == 0x85944171f73967e8


def test_distribution_and_inequality_json():
    q = pr_box()
    d = io.table_to_json(q)
    assert d["entries"][0] == "1/2"
    assert io.distribution_from_json(json.loads(json.dumps(d))) == q
    b = io.reference_inequality("i3322")
    assert io.inequality_from_json(io.table_to_json(b)) == b


def test_bad_entries():
    with pytest.raises(ParseError):
        io.distribution_from_json({"scenario": "2,2,2,2", "entries": ["x"] * 16})


def test_registry_roundtrip(tmp_path):
    reg = run_search(Scenario(3, 3, 2, 2), pair_source="saturating")
    cfg = io.RunConfig("generate", "3,3,2,2")
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    io.save_registry(reg, str(p1), cfg)
    back, cfg2 = io.load_registry(str(p1))
    assert cfg2 == cfg and len(back) == len(reg)
    assert [r.signature.key() for r in back] == [r.signature.key() for r in reg]
    io.save_registry(back, str(p2), cfg2)
    assert p1.read_bytes() == p2.read_bytes()
    data = json.loads(p1.read_text())
    assert data["content_hash"].startswith("sha256:")
    assert all(len(c["signature_hash"]) == 16 for c in data["classes"])


def test_registry_format_checked():
    with pytest.raises(ParseError):
        io.registry_from_json({"format": "other"})


def test_verify_flags_duplicates_and_rank_deficiency():
    reg = run_search(S2222)
    assert io.verify_registry(reg).ok
    chsh = io.reference_inequality("chsh")
    dup = Registry(S2222)
    for r in reg:
        dup.add_record(InequalityClassRecord(0, r.representative, r.signature))
    dup.add_record(InequalityClassRecord(0, chsh, signature(chsh)))
    rep = io.verify_registry(dup)
    assert not rep.ok and any(f["check"] == "duplicate" for f in rep.failures)
    weak = BellInequality(S2222, [Fraction(int(i in (0, 15))) for i in range(16)], 0)
    bad = Registry(S2222)
    bad.add_record(InequalityClassRecord(0, weak, signature(weak)))
    rep = io.verify_registry(bad)
    assert any(f["check"] == "is_facet" for f in rep.failures)


def test_verify_compares_reference_totals():
    reg = run_search(Scenario(3, 3, 2, 2))
    rep = io.verify_registry(reg)
    assert rep.ok and rep.reference == {"classes": 3, "facets": 684}


def test_bounds_csv_grid():
    text = io.bounds_csv({(2, 2): Fraction(2, 3), (3, 3): Fraction(4, 7), (4, 3): Fraction(5, 9)})
    assert text.splitlines() == ["mB\\mA,2,3,4", "2,2/3,,", "3,,4/7,5/9"]


def test_reference_inequalities_are_facets():
    from bellfacets.facetgen import is_facet
    for name in io.reference_data()["inequalities"]:
        assert is_facet(io.reference_inequality(name)), name
