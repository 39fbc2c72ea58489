"""Persistence: JSON for distributions, inequalities and registries; CSV tables; reference data."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Optional

from ._rational import fraction_str, parse_fraction
from .errors import ParseError
from .facetgen import (FULL, AffineSignature, InequalityClassRecord, Registry, SearchReport,
                       equivalent, is_facet, orbit_size, signature)
from .scenario import BellInequality, Distribution, Scenario

REGISTRY_FORMAT = "bellfacets-registry/1"

_FNV_OFFSET = 0xcbf29ce484222325
_FNV_PRIME = 0x100000001b3


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def signature_hash(sig: AffineSignature) -> str:
    """FNV-1a over the comma-joined ``num/den`` vertex values of the affine-fixed signature."""
    text = ",".join(fraction_str(v) for v in sig.values)
    return f"{fnv1a64(text.encode()):016x}"


def content_hash(payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(body).hexdigest()


# ---------------------------------------------------------------------------
# tables


def table_to_json(t) -> dict:
    out = {"scenario": str(t.scenario), "entries": [fraction_str(Fraction(v)) for v in t.entries]}
    if isinstance(t, BellInequality):
        out["bound"] = fraction_str(t.bound)
    return out


def _entries(raw) -> list:
    try:
        return [parse_fraction(v) if isinstance(v, str) else Fraction(v) for v in raw]
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational entry: {exc}") from exc


def distribution_from_json(d: dict) -> Distribution:
    return Distribution(Scenario.parse(d["scenario"]), _entries(d["entries"]))


def inequality_from_json(d: dict) -> BellInequality:
    """Accepts either a flat ``entries`` array or a ``table`` (rows ``(x, a)``, columns ``(y, b)``)."""
    s = Scenario.parse(d["scenario"])
    bound = parse_fraction(str(d.get("bound", "1")))
    if "table" in d:
        return BellInequality.from_table(s, [_entries(r) for r in d["table"]], bound=bound)
    return BellInequality(s, _entries(d["entries"]), bound)


def load_inequality(path: str) -> BellInequality:
    with open(path) as fh:
        try:
            return inequality_from_json(json.load(fh))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ParseError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    command: str
    scenario: Optional[str] = None
    mode: str = FULL
    noise: list = field(default_factory=lambda: ["1/100"])
    samples: int = 0
    seed: int = 0
    workers: int = 1
    npa_level: int = 1
    precision: Optional[str] = None
    sdp_solver: Optional[str] = None
    out: str = "."
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)


# ---------------------------------------------------------------------------
# registries


def record_to_json(r: InequalityClassRecord, s: Scenario) -> dict:
    return {
        "id": r.id,
        "coefficients": [fraction_str(v) for v in r.representative.entries],
        "bound": fraction_str(r.representative.bound),
        "tally": {fraction_str(k): v for k, v in sorted(r.signature.tally)},
        "signature_hash": signature_hash(r.signature),
        "orbitSize": orbit_size(r, s),
        "provenance": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in r.provenance.items()},
    }


def registry_to_json(reg: Registry, config: Optional[RunConfig] = None) -> dict:
    rep = reg.report or SearchReport()
    report = {k: v for k, v in asdict(rep).items() if k != "seconds"}
    payload = {
        "format": REGISTRY_FORMAT,
        "scenario": str(reg.scenario),
        "mode": reg.mode,
        "config": config.to_dict() if config else None,
        "candidates": reg.candidates,
        "jobs_done": reg.jobs_done,
        "history": [list(h) for h in reg.history],
        "report": report,
        "classes": [record_to_json(r, reg.scenario) for r in reg.records],
    }
    payload["content_hash"] = content_hash(payload)
    return payload


def save_registry(reg: Registry, path: str, config: Optional[RunConfig] = None):
    """Write atomically so an interrupted checkpoint never leaves a truncated file."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(registry_to_json(reg, config), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def registry_from_json(d: dict) -> tuple[Registry, Optional[RunConfig]]:
    if d.get("format") != REGISTRY_FORMAT:
        raise ParseError(f"unknown registry format {d.get('format')!r}")
    s = Scenario.parse(d["scenario"])
    reg = Registry(s, d.get("mode", FULL))
    for c in d["classes"]:
        b = BellInequality(s, _entries(c["coefficients"]), parse_fraction(c["bound"]))
        rec = InequalityClassRecord(c["id"], b, signature(b), c.get("orbitSize"),
                                    dict(c.get("provenance", {})))
        reg.add_record(rec)
    reg.candidates = d.get("candidates", 0)
    reg.jobs_done = d.get("jobs_done", 0)
    reg.history = [tuple(h) for h in d.get("history", [])]
    if d.get("report"):
        reg.report = SearchReport(**d["report"])
    cfg = RunConfig.from_dict(d["config"]) if d.get("config") else None
    return reg, cfg


def load_registry(path: str) -> tuple[Registry, Optional[RunConfig]]:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    return registry_from_json(d)


def registry_csv(reg: Registry) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_id", "tally", "orbit_size"])
    for r in reg.records:
        tally = " ".join(f"{fraction_str(k)}:{v}" for k, v in sorted(r.signature.tally))
        w.writerow([r.id, tally, orbit_size(r, reg.scenario)])
    return buf.getvalue()


def bounds_csv(cells: dict) -> str:
    """Grid with rows ``mB`` and columns ``mA``; ``cells`` maps ``(mA, mB)`` to a fraction."""
    mAs = sorted({a for a, _ in cells})
    mBs = sorted({b for _, b in cells})
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mB\\mA"] + mAs)
    for mB in mBs:
        w.writerow([mB] + [fraction_str(cells[(mA, mB)]) if (mA, mB) in cells else ""
                           for mA in mAs])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    scenario: str
    classes: int
    total: int
    failures: list = field(default_factory=list)
    reference: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return dict(asdict(self), ok=self.ok)


def verify_registry(reg: Registry, compare_reference: bool = True) -> VerificationReport:
    """Re-check every record: facet, pairwise inequivalence, orbit size; then the reference counts.

    Reference counts are compared only for complete registries (class count
    equal to the reference), since partial runs are expected on big scenarios.
    Where lifting families split into several relabelling orbits the reference
    carries ``relabelling_classes``, which is the count compared.
    """
    s = reg.scenario
    failures = []
    sizes = []
    for r in reg.records:
        if not is_facet(r.representative):
            failures.append({"id": r.id, "check": "is_facet"})
        stored = r.orbit_size
        r.orbit_size = None
        size = orbit_size(r, s)
        if stored is not None and stored != size:
            failures.append({"id": r.id, "check": "orbit_size", "stored": stored, "computed": size})
        sizes.append(size)
    recs = reg.records
    for i in range(len(recs)):
        for j in range(i + 1, len(recs)):
            if recs[i].signature.tally != recs[j].signature.tally:
                continue
            if equivalent(recs[i].signature, recs[j].signature, s):
                failures.append({"id": recs[j].id, "check": "duplicate", "of": recs[i].id})
    rep = VerificationReport(str(s), len(recs), sum(sizes), failures)
    if compare_reference:
        ref = reference_data()
        key = scenario_key(s)
        solved = ref["solved_scenarios"].get(key)
        n_ref = solved.get("relabelling_classes", solved["classes"]) if solved else None
        if solved and len(recs) == n_ref:
            rep.reference = {"classes": n_ref, "facets": solved["facets"]}
            if rep.total != solved["facets"]:
                failures.append({"check": "facet_total", "expected": solved["facets"],
                                 "got": rep.total})
            hist = ref["class_sizes"].get(key)
            if hist:
                got: dict = {}
                for n in sizes:
                    got[str(n)] = got.get(str(n), 0) + 1
                rep.reference["class_sizes"] = hist
                if got != hist:
                    failures.append({"check": "class_sizes", "expected": hist, "got": got})
    return rep


# ---------------------------------------------------------------------------
# reference data


def scenario_key(s: Scenario) -> str:
    return f"{s.mA},{s.mB},{s.kA},{s.kB}"


@lru_cache(maxsize=1)
def reference_data() -> dict:
    text = resources.files("bellfacets").joinpath("data/reference.json").read_text()
    return json.loads(text)


def reference_inequality(name: str) -> BellInequality:
    return inequality_from_json(reference_data()["inequalities"][name])


def reference_liftings(name: str) -> list[str]:
    return list(reference_data()["inequalities"][name].get("liftings", []))
