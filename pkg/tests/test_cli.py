import json
import subprocess
import sys

import pytest

from bellfacets import io
from bellfacets.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, main


def _run(argv, capsys):
    code = main(["-q"] + argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        code, out, _ = _run(["generate", "--scenario", "2,2,2,2", "--out", str(d)], capsys)
        assert code == EXIT_OK
        assert json.loads(out)["classes"] == 2 and json.loads(out)["facets"] == 24
    ra, rb = json.loads((a / "registry.json").read_text()), json.loads((b / "registry.json").read_text())
    ra["config"]["out"] = rb["config"]["out"] = None
    assert ra["classes"] == rb["classes"]
    assert (a / "summary.csv").read_text() == (b / "summary.csv").read_text()
    assert (a / "progress.log").exists()


def test_generate_rerun_from_embedded_config_is_byte_identical(tmp_path, capsys):
    out = tmp_path / "run"
    _run(["generate", "--scenario", "3,3,2,2", "--pair-source", "saturating", "--out", str(out)],
         capsys)
    first = (out / "registry.json").read_bytes()
    cfg = json.loads(first)["config"]
    argv = ["generate", "--scenario", cfg["scenario"], "--mode", cfg["mode"],
            "--pair-source", cfg["extra"]["pair_source"], "--out", cfg["out"], "--noise", *cfg["noise"]]
    assert _run(argv, capsys)[0] == EXIT_OK
    assert (out / "registry.json").read_bytes() == first


def test_verify_ok_and_failures(tmp_path, capsys):
    out = tmp_path / "g"
    _run(["generate", "--scenario", "2,2,2,2", "--out", str(out)], capsys)
    path = out / "registry.json"
    code, text, _ = _run(["verify", str(path)], capsys)
    assert code == EXIT_OK and json.loads(text)["reference"] == {"classes": 2, "facets": 24}
    data = json.loads(path.read_text())
    data["classes"].append(dict(data["classes"][1], id=2))
    bad = tmp_path / "dup.json"
    bad.write_text(json.dumps(data))
    code, text, _ = _run(["verify", str(bad)], capsys)
    assert code == EXIT_VERIFY and "duplicate" in text


def test_verify_import(tmp_path, capsys):
    out = tmp_path / "g"
    _run(["generate", "--scenario", "2,2,2,2", "--out", str(out)], capsys)
    ineq = tmp_path / "chsh.json"
    ineq.write_text(json.dumps(io.reference_data()["inequalities"]["chsh_relabelled"]))
    code, text, _ = _run(["verify", str(out / "registry.json"), "--import", str(ineq)], capsys)
    assert code == EXIT_OK and json.loads(text)["imported"] == ["KnownClassOf"]


def test_bounds(tmp_path, capsys):
    code, out, _ = _run(["bounds", "--scenario", "2,2", "3,3", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert out.splitlines() == ["mB\\mA,2,3", "2,2/3,", "3,,4/7"]
    data = json.loads((tmp_path / "bounds.json").read_text())
    assert [c["bound"] for c in data["cells"]] == ["2/3", "4/7"]


@pytest.mark.parametrize("argv", [
    ["bounds", "--scenario", "2,2,3,3"],
    ["bounds", "--scenario", "5,5"],
    ["generate", "--scenario", "2,2,x,2"],
    ["generate", "--scenario", "2,2,3,3"],
    ["generate", "--scenario", "2,2,2,2", "--pair-source", "nope"],
    ["threshold", "--reference", "nope"],
    ["verify", "/nonexistent/registry.json"],
])
def test_config_errors(argv, tmp_path, capsys):
    code, _, err = _run(argv + (["--out", str(tmp_path)] if argv[0] != "verify" else []), capsys)
    assert code == EXIT_CONFIG and err.startswith("error:")


def test_threshold_solver_unavailable(tmp_path, capsys):
    code, _, err = _run(["threshold", "--reference", "chsh", "--sdp-solver", "/nonexistent/sdpa",
                         "--out", str(tmp_path)], capsys)
    assert code == EXIT_SOLVER and "not found" in err


def test_threshold_rejects_non_facet(tmp_path, capsys):
    f = tmp_path / "weak.json"
    f.write_text(json.dumps({"scenario": "2,2,2,2", "bound": "0", "entries": ["1/1"] + ["0"] * 14 + ["1/1"]}))
    code, _, _ = _run(["threshold", str(f), "--out", str(tmp_path)], capsys)
    assert code == EXIT_VERIFY


@pytest.mark.solver
def test_threshold_chsh(tmp_path, capsys):
    code, out, _ = _run(["threshold", "--reference", "chsh", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    best = json.loads(out)["best"]
    assert best["lo"] <= 2 / 3 + 2e-3 and best["hi"] >= 2 / 3 - 2e-3
    rep = json.loads((tmp_path / "threshold_chsh.json").read_text())
    assert rep["liftings_total"] == 16 and rep["liftings_cut"] == 8
    assert (tmp_path / "threshold_chsh.csv").read_text().startswith("inequality,lifting")


def test_export_sdp(tmp_path, capsys):
    f = tmp_path / "p.dat-s"
    code, out, _ = _run(["export-sdp", "--reference", "chsh", "--lifting", "0,0;0,0",
                         "--output", str(f)], capsys)
    assert code == EXIT_OK and json.loads(out)["variables"] == 10
    from bellfacets.npa import parse_sdpa
    assert parse_sdpa(f.read_text()).block_sizes == [5, -16]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bellfacets.cli", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "generate" in proc.stdout
