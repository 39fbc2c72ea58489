"""Command-line front end: generate, bounds, threshold, verify, export-sdp."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import io
from ._rational import fraction_str, parse_fraction
from .errors import (BellFacetsError, EtaOutOfRange, InvalidScenario, NonBinaryScenario,
                     ParseError, ShapeMismatch, SnapVerificationFailed, SolverUnavailable)
from .scenario import Scenario

log = logging.getLogger("bellfacets")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3, 4

# bounds cells with more than this many setting pairs need --extended
BOUNDS_CELL_LIMIT = 16


class ConfigError(BellFacetsError):
    pass


class VerificationFailed(BellFacetsError):
    pass


def _scenario(text: str) -> Scenario:
    try:
        return Scenario.parse(text)
    except (ValueError, InvalidScenario) as exc:
        raise ConfigError(f"bad scenario {text!r}: {exc}") from None


def _fractions(values) -> list:
    try:
        return [parse_fraction(v) for v in values]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad fraction: {exc}") from None


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write(path: str, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    from .facetgen import PAIR_SOURCES, run_search
    from .qdist import run_search_quantum

    s = _scenario(args.scenario)
    if args.pair_source not in PAIR_SOURCES:
        raise ConfigError(f"--pair-source must be one of {PAIR_SOURCES}")
    out = _outdir(args.out)
    reg_path = os.path.join(out, "registry.json")
    cfg = io.RunConfig("generate", args.scenario, args.mode, list(args.noise), args.samples,
                       args.seed, args.workers, out=out,
                       extra={"pair_source": args.pair_source, "patience": args.patience})
    registry = None
    if args.resume:
        registry, saved = io.load_registry(args.resume)
        if registry.scenario != s:
            raise ConfigError("resumed registry belongs to a different scenario")
        cfg = saved or cfg
    progress_log = open(os.path.join(out, "progress.log"), "a")
    t0 = time.time()

    def progress(reg):
        line = f"{reg.candidates}\t{len(reg)}\t{time.time() - t0:.1f}"
        progress_log.write(line + "\n")
        progress_log.flush()
        if not args.quiet:
            print(f"classes {len(reg)} after {reg.candidates} candidates", file=sys.stderr)

    def checkpoint(reg):
        io.save_registry(reg, reg_path, cfg)

    try:
        if s.is_binary:
            if args.samples:
                raise ConfigError("--samples applies to quantum search (k >= 3) only")
            reg = run_search(s, _fractions(args.noise), args.mode, registry=registry,
                             workers=args.workers, pair_source=args.pair_source,
                             patience=args.patience, progress=progress, checkpoint=checkpoint,
                             checkpoint_every=args.checkpoint_every)
        else:
            if not args.samples:
                raise ConfigError("non-binary scenarios need --samples for quantum seeding")
            reg = run_search_quantum(s, args.samples, args.seed, args.mode, registry=registry,
                                     workers=args.workers, patience=args.patience,
                                     progress=progress, checkpoint=checkpoint,
                                     checkpoint_every=args.checkpoint_every)
    finally:
        progress_log.close()
    io.save_registry(reg, reg_path, cfg)
    _write(os.path.join(out, "summary.csv"), io.registry_csv(reg))
    sizes = reg.orbit_sizes()
    print(json.dumps({"scenario": str(s), "mode": reg.mode, "classes": len(reg),
                      "facets": sum(sizes), "candidates": reg.candidates,
                      "seconds": round(time.time() - t0, 1), "registry": reg_path}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def _bounds_scenario(text: str) -> Scenario:
    parts = text.split(",")
    if len(parts) == 2:
        text = text + ",2,2"
    s = _scenario(text)
    if not s.is_binary:
        raise NonBinaryScenario(f"fundamental bounds need binary outcomes, got {s}")
    return s


def cmd_bounds(args) -> int:
    from .detection import fundamental_bound

    cells, rows = {}, []
    precision = parse_fraction(args.precision) if args.precision else None
    for text in args.scenario:
        s = _bounds_scenario(text)
        if s.mA * s.mB > BOUNDS_CELL_LIMIT and not args.extended:
            raise ConfigError(f"{s} needs --extended (long runtime)")
        kw = {"precision": precision} if precision else {}
        r = fundamental_bound(s, **kw)
        cells[(s.mA, s.mB)] = r.value
        rows.append({"mA": s.mA, "mB": s.mB, "bound": fraction_str(r.value),
                     "bracket": [fraction_str(v) for v in r.bracket], "verified": r.snapped,
                     "seeds": r.seeds, "pruned": r.pruned, "lps": r.lps,
                     "seconds": round(r.seconds, 2)})
        if not args.quiet:
            print(f"{s}: {r.value} ({'verified' if r.snapped else 'UNVERIFIED'}, "
                  f"{r.seconds:.1f}s)", file=sys.stderr)
    out = _outdir(args.out)
    csv_text = io.bounds_csv(cells)
    _write(os.path.join(out, "bounds.csv"), csv_text)
    payload = {"config": io.RunConfig("bounds", ";".join(args.scenario),
                                      precision=args.precision, out=out).to_dict(),
               "cells": rows}
    payload["content_hash"] = io.content_hash(payload)
    _write(os.path.join(out, "bounds.json"), json.dumps(payload, indent=1) + "\n")
    print(csv_text, end="")
    return EXIT_OK if all(r["verified"] for r in rows) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# threshold


def _load_target(args):
    from .detection import Lifting

    if args.reference:
        try:
            b = io.reference_inequality(args.reference)
        except KeyError:
            raise ConfigError(f"no built-in inequality named {args.reference!r}") from None
        name = args.reference
    elif args.inequality:
        b = io.load_inequality(args.inequality)
        name = os.path.splitext(os.path.basename(args.inequality))[0]
    else:
        raise ConfigError("give an inequality file or --reference NAME")
    try:
        lifts = [Lifting.parse(t) for t in args.lifting] or None
    except ValueError:
        raise ConfigError("liftings look like '0,1;1,0'") from None
    return name, b, lifts


def cmd_threshold(args) -> int:
    from . import npa
    from .detection import best_liftings, liftings, passes_cut
    from .facetgen import is_facet

    name, b, lifts = _load_target(args)
    if not args.skip_facet_check and not is_facet(b):
        raise VerificationFailed(f"{name} is not a facet (use --skip-facet-check to override)")
    solver = npa.SolverConfig.from_env(args.sdp_solver, args.solver_profile)
    candidates = lifts or liftings(b.scenario)
    precision = float(args.precision) if args.precision else 1e-4
    cut = not args.no_cut and lifts is None
    survivors = [L for L in candidates if not cut or passes_cut(b, L, solver)]
    if not args.quiet:
        print(f"{name}: {len(survivors)} of {len(candidates)} liftings pass the cut",
              file=sys.stderr)
    results = best_liftings(b, args.npa_level, solver, cut=False, candidates=survivors,
                            precision=precision)
    out = _outdir(args.out)
    records = [{"inequality": name, "lifting": str(r.lifting), "level": r.level,
                "lo": r.bracket[0], "hi": r.bracket[1],
                "solver_history": [t["status"] for t in r.transcript],
                "transcript": r.transcript} for r in results]
    payload = {"config": io.RunConfig("threshold", str(b.scenario), npa_level=args.npa_level,
                                      precision=str(precision), sdp_solver=solver.path,
                                      out=out, extra={"inequality": name}).to_dict(),
               "liftings_total": len(candidates), "liftings_cut": len(candidates) - len(survivors),
               "results": records}
    payload["content_hash"] = io.content_hash(payload)
    _write(os.path.join(out, f"threshold_{name}.json"), json.dumps(payload, indent=1) + "\n")
    lines = ["inequality,lifting,level,lo,hi"]
    lines += [f"{r['inequality']},\"{r['lifting']}\",{r['level']},{r['lo']:.6f},{r['hi']:.6f}"
              for r in records]
    _write(os.path.join(out, f"threshold_{name}.csv"), "\n".join(lines) + "\n")
    best = records[0] if records else None
    print(json.dumps({"inequality": name, "level": args.npa_level,
                      "best": best and {k: best[k] for k in ("lifting", "lo", "hi")},
                      "evaluated": len(records)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    reg, _ = io.load_registry(args.registry)
    extra = []
    for path in args.import_file or []:
        from .facetgen import import_representatives
        extra += import_representatives(reg, [io.load_inequality(path)])
    rep = io.verify_registry(reg, compare_reference=not args.no_reference)
    out = rep.to_dict()
    if extra:
        out["imported"] = [None if r is None else type(r).__name__ for r in extra]
    print(json.dumps(out, indent=1))
    return EXIT_OK if rep.ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# export-sdp


def cmd_export_sdp(args) -> int:
    from . import npa
    from .detection import effective_objective, lift_inequality

    name, b, lifts = _load_target(args)
    if not lifts or len(lifts) != 1:
        raise ConfigError("export-sdp needs exactly one --lifting")
    eff = effective_objective(lift_inequality(b, lifts[0]), parse_fraction(args.eta))
    spec = npa.build_moment_structure(eff.scenario, args.npa_level)
    obj = npa.Objective.from_effective(spec, eff)
    text = npa.export_sdp(spec, obj)
    _write(args.output, text)
    print(json.dumps({"file": args.output, "constant": float(obj.constant),
                      "variables": spec.n_variables, "size": spec.size}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellfacets", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="search facet classes of a scenario")
    g.add_argument("--scenario", required=True, help="mA,mB,kA,kB")
    g.add_argument("--mode", choices=["tally", "full"], default="full")
    g.add_argument("--noise", nargs="+", default=["1/100"], help="noise levels as fractions")
    g.add_argument("--pair-source", default="mixed")
    g.add_argument("--samples", type=int, default=0, help="quantum samples (k >= 3)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--patience", type=int, default=None)
    g.add_argument("--checkpoint-every", type=int, default=10000)
    g.add_argument("--resume", help="registry file to continue from")
    g.add_argument("--out", default="out")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bounds", help="fundamental detection-efficiency bounds")
    b.add_argument("--scenario", nargs="+", default=["2,2", "3,3", "4,3", "4,4"],
                   help="mA,mB cells (binary outcomes)")
    b.add_argument("--precision", default=None, help="bisection width as a fraction")
    b.add_argument("--extended", action="store_true", help="allow long cells such as 5,5")
    b.add_argument("--out", default="out")
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("threshold", help="NPA thresholds over the liftings of an inequality")
    t.add_argument("inequality", nargs="?", help="inequality JSON file")
    t.add_argument("--reference", help="built-in inequality name instead of a file")
    t.add_argument("--lifting", action="append", default=[], help="restrict to these liftings")
    t.add_argument("--npa-level", type=int, default=1)
    t.add_argument("--precision", default=None)
    t.add_argument("--sdp-solver", default=None, help="solver executable, 'bridge' or 'inprocess'")
    t.add_argument("--solver-profile", default=None, choices=["sdpa", "csdp", "bridge"])
    t.add_argument("--no-cut", action="store_true")
    t.add_argument("--skip-facet-check", action="store_true")
    t.add_argument("--out", default="out")
    t.set_defaults(func=cmd_threshold)

    v = sub.add_parser("verify", help="re-verify a registry file")
    v.add_argument("registry")
    v.add_argument("--import", dest="import_file", action="append",
                   help="inequality file to classify into the registry first")
    v.add_argument("--no-reference", action="store_true")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export-sdp", help="write the sparse SDPA file for one lifting")
    e.add_argument("inequality", nargs="?")
    e.add_argument("--reference")
    e.add_argument("--lifting", action="append", default=[])
    e.add_argument("--eta", default="2/3")
    e.add_argument("--npa-level", type=int, default=1)
    e.add_argument("--output", required=True)
    e.set_defaults(func=cmd_export_sdp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidScenario, NonBinaryScenario, ShapeMismatch, ParseError,
            EtaOutOfRange, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (VerificationFailed, SnapVerificationFailed) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except BellFacetsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
