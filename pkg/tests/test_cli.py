import json

import numpy as np
import pytest

from dcsparse.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "classify" in capsys.readouterr().out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    assert main(["classify", "--seq", "missing"]) == 2
    assert main(["classify", "--registry", "/nonexistent.json"]) == 2


def test_classify(capsys):
    code, rep = run(capsys, "classify", "--seq", "factorial")
    assert code == 0
    assert rep["results"]["verdict"] == "quasi-analytic"
    assert rep["seed"] == 0 and "numpy" in rep["versions"]
    assert "timestamp" not in json.dumps(rep)


def test_registry_env(capsys, tmp_path, monkeypatch):
    path = tmp_path / "reg.json"
    path.write_text(json.dumps([{"name": "g4", "kind": "gevrey", "params": {"s": 4}, "K": 30}]))
    monkeypatch.setenv("DCSPARSE_REGISTRY", str(path))
    code, rep = run(capsys, "classify", "--seq", "g4")
    assert code == 0 and rep["results"]["verdict"] == "non-quasi-analytic"


def test_convexify_bump_transition(capsys, tmp_path):
    assert run(capsys, "convexify", "--seq", "gevrey3")[0] == 0
    csv = tmp_path / "b.csv"
    code, rep = run(capsys, "bump", "--seq", "gevrey2", "--eps", "0.5", "--interval", "0,4",
                    "--grid", "2000", "--csv", str(csv))
    assert code == 0 and rep["results"]["certificateHolds"]
    assert csv.read_text().splitlines()[0] == "x,d0,d1,d2,d3,d4"
    code, rep = run(capsys, "transition", "--i", "5", "--grid", "2000")
    assert code == 0 and rep["results"]["startsAtZero"]


def test_infeasible_synthesis_exits_one(capsys):
    assert main(["bump", "--interval", "0,1e-300", "--eps", "1e-30"]) == 1


def test_sparse_commands(capsys, tmp_path):
    code, rep = run(capsys, "sparse", "build", "--point", "0.25,0.5", "--depth", "12",
                    "--grid", "5001")
    assert code == 0 and rep["results"]["strictlyIncreasing"]
    code, rep = run(capsys, "sparse", "eval", "--point", "0.25,0.5", "--u", "0.25", "1.0")
    assert rep["results"]["rows"][0]["provenance"] == "P"
    assert isinstance(rep["results"]["rows"][1]["provenance"], int)
    rng = np.random.default_rng(0)
    np.savetxt(tmp_path / "p.csv", rng.uniform(-2, 2, (10, 2)), delimiter=",")
    np.savetxt(tmp_path / "q.csv", rng.uniform(-5, 5, 10), delimiter=",")
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    for out in (out1, out2):
        assert main(["sparse", "report", "--points", str(tmp_path / "p.csv"), "--queries",
                     str(tmp_path / "q.csv"), "--depth", "20", "--no-audit",
                     "--out", str(out)]) == 0
    rep = json.loads(out1.read_text())
    assert len(rep["results"]["rows"]) == 100
    assert out1.read_bytes() == out2.read_bytes()


def test_wetzel_commands(capsys):
    code, rep = run(capsys, "wetzel", "family", "--level", "3", "--check-grid", "2000",
                    "--sample", "20", "--pairs", "10")
    assert code == 0 and rep["results"]["gaps"] == 7
    code, rep = run(capsys, "wetzel", "equalizer", "--triple", "sin-cos")
    assert code == 0 and abs(rep["results"]["minSeparation"] - np.pi) < 1e-9
    code, _ = run(capsys, "wetzel", "equalizer", "--triple", "degenerate")
    assert code == 1


def test_envelope_commands(capsys, tmp_path):
    prof = tmp_path / "prof.json"
    prof.write_text(json.dumps([1, 1, 2, 6, 24]))
    code, rep = run(capsys, "envelope", "fit", "--profile", str(prof), "--seq", "factorial",
                    "--B-grid", "0.5:4:0.1")
    assert code == 0 and len(rep["results"]["fits"]) == 36
    assert run(capsys, "envelope", "check", "--profile", str(prof), "--seq", "factorial",
               "--beta", "1", "--B", "1")[0] == 0
    assert run(capsys, "envelope", "check", "--profile", str(prof), "--seq", "factorial",
               "--beta", "0.5", "--B", "1")[0] == 1


def test_refute_poly(capsys):
    code, rep = run(capsys, "refute-poly", "--degree", "2", "--per-column", "3",
                    "--trials", "5", "--exhaustive", "--seed", "4")
    assert code == 0 and rep["results"]["exhaustive"]["max_family"] == 4
    assert all(c["sizes"][-1] == 1 for c in rep["results"]["chains"])
