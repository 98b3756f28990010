import json
import subprocess
import sys

import pytest

from sirslab.cli import main
from sirslab.graphs import read_graph


def write_config(tmp_path, **kw):
    cfg = {"graph": {"family": "star", "n_leaves": 5}, "process": {"lambda": 1.0, "rho": 1.0}, "trials": 8}
    cfg.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_gen_and_spectral(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert main(["gen", "--family", "regular", "--n", "60", "--d", "4", "--seed", "1", "--out", str(g)]) == 0
    info = json.loads(capsys.readouterr().err)
    assert info["n"] == 60 and info["m"] == 120
    assert read_graph(g).m == 120
    assert main(["spectral", "--graph", str(g), "--d", "4", "--pairs", "200"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert 0 < out["delta"] < 1 and out["density_check"]["cut_violations"] == 0


def test_simulate(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", str(cfg), "--trials", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 7
    summary = json.loads(capsys.readouterr().err)
    assert summary["trials"] == 5


def test_simulate_is_reproducible(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg), "--out", str(a), "--summary", str(tmp_path / "s1")])
    main(["simulate", "--config", str(cfg), "--out", str(b), "--summary", str(tmp_path / "s2")])
    assert a.read_bytes() == b.read_bytes()


def test_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--lambdas", "0.5,1,2", "--out", str(tmp_path / "s.csv")]) == 0
    assert len(capsys.readouterr().err.splitlines()) == 4


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, trials=-3)
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert "trials" in capsys.readouterr().err


def test_oracle_star(capsys):
    assert main(["oracle", "--family", "star", "--size", "5", "--lambda", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["expected_T"] > 1 and out["residual"] <= 1e-10


def test_oracle_tiny_matches_star(capsys):
    main(["oracle", "--family", "star", "--size", "3", "--lambda", "1"])
    star = json.loads(capsys.readouterr().out)["expected_T"]
    main(["oracle", "--family", "tiny", "--shape", "star", "--size", "4", "--lambda", "1", "--init", "1000"])
    tiny = json.loads(capsys.readouterr().out)["expected_T"]
    assert star == pytest.approx(tiny, rel=1e-8)


def test_oracle_tiny_sis(capsys):
    assert main(["oracle", "--family", "tiny", "--size", "3", "--lambda", "1", "--mode", "SIS"]) == 0
    assert json.loads(capsys.readouterr().out)["expected_T"] > 1


def test_drift_scan_mean_field(capsys):
    assert main(["drift-scan", "--mean-field", "--n", "1000", "--i-grid", "20:240:20", "--r-grid", "0:500:100"]) == 0
    cap = capsys.readouterr()
    assert cap.out.splitlines()[0] == "I,R,max_drift,mean_drift,band_member"
    meta = json.loads(cap.err)
    assert meta["i_star"] == 250 and meta["band"] is not None


def test_drift_scan_needs_input(capsys):
    assert main(["drift-scan", "--i-grid", "1:5:1", "--r-grid", "0"]) == 2


def test_verify_suite(capsys):
    assert main(["verify", "--suite", "oracles"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "sirslab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
