import json
import subprocess
import sys

import pytest

from nehari_lab import landmarks
from nehari_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.mark.parametrize("argv", [
    ["eigen", "--r", "1.0"],
    ["curve", "--p", "2", "--q", "3"],
    ["phase", "--alpha-range", "1,x"],
    ["phase", "--grid", "1x5"],
    ["eigen", "--r", "2", "--n", "8"],
    ["ground", "--alpha", "1"],
    ["dichotomy", "--tol-grad", "0"],
    [],
])
def test_usage_errors_exit_2(capsys, tmp_path, argv):
    code, doc, _ = run(capsys, *argv, "--out", str(tmp_path)) if argv else run(capsys)
    assert code == 2 and doc is None


def test_eigen_outputs(capsys, tmp_path):
    code, doc, err = run(capsys, "eigen", "--r", "2", "--n", "511", "--domain", "0,1",
                         "--out", str(tmp_path))
    assert code == 0
    assert doc["lambda1"] == pytest.approx(9.87, abs=0.01)
    assert doc["oracle"]["relative_error"] < 1e-3
    assert "relative error" in err
    prof = (tmp_path / "eigen_profile.txt").read_text().splitlines()
    assert len(prof) == 513 and len(prof[0].split()) == 2
    saved = json.loads((tmp_path / "eigen.json").read_text())
    assert saved["config"]["n"] == 511 and len(saved["phi"]) == 511


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 63, "p": 5.0}))
    code, doc, err = run(capsys, "dichotomy", "--config", str(cfg), "--n", "127",
                         "--out", str(tmp_path))
    assert code == 0
    assert doc["config"]["n"] == 127 and doc["config"]["p"] == 5.0
    assert doc["label"] == "bounded (p>2q)"


def test_dichotomy_label(capsys, tmp_path):
    code, doc, _ = run(capsys, "dichotomy", "--p", "3", "--q", "2", "--out", str(tmp_path))
    assert code == 0 and doc["label"] == "divergent (p<2q)"


def test_minimize_minus_infinity(capsys, tmp_path, mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    code, doc, _ = run(capsys, "minimize", "--alpha", repr(lm.lam_p + 1), "--beta", "0",
                       "--out", str(tmp_path))
    assert code == 0 and doc["m"]["kind"] == "-inf" and doc["m"]["probe_min"] < -1e6


def test_ground_region_c_and_boundary_flag(capsys, tmp_path, mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    mid = 0.5 * (lm.lam_p + lm.alpha_star)
    code, doc, _ = run(capsys, "ground", "--alpha", repr(mid), "--beta", repr(lm.lam_q - 1),
                       "--out", str(tmp_path))
    assert code == 0 and doc["region"] == "C" and doc["d"]["value"] > 0 and doc["d"]["attained"]
    code, doc, _ = run(capsys, "ground", "--alpha", repr(lm.lam_p), "--beta", repr(lm.lam_q - 1),
                       "--out", str(tmp_path))
    assert code == 0 and doc["on_boundary"] and "alpha=lambda1(p)" in doc["boundary_tags"]


def test_witness_only_on_request(capsys, tmp_path, mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    argv = ["minimize", "--alpha", repr(lm.lam_p - 0.5), "--beta", repr(lm.lam_q + 0.5),
            "--out", str(tmp_path)]
    _, doc, _ = run(capsys, *argv)
    assert "witness" not in doc["m"]
    _, doc, _ = run(capsys, *argv, "--emit-witness")
    assert len(doc["m"]["witness"]) == 511


def test_sweep_csv(capsys, tmp_path):
    code, doc, _ = run(capsys, "sweep", "--kind", "divergent", "--out", str(tmp_path))
    assert code == 0 and doc["trend"] == "divergent"
    lines = (tmp_path / "sweep_divergent.csv").read_text().splitlines()
    assert lines[0].startswith("alpha,beta,energy") and len(lines) == 9


def test_curve_small(capsys, tmp_path):
    code, doc, _ = run(capsys, "curve", "--n", "63", "--samples", "6", "--out", str(tmp_path))
    assert code == 0 and doc["monotone"] and doc["failure_fraction"] == 0.0
    assert (tmp_path / "curve.csv").read_text().startswith(
        "alpha,beta_star,constraint_value,kkt_residual\n")


def test_jobs_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("NEHARI_LAB_JOBS", "2")
    out = tmp_path / "o"
    r = subprocess.run([sys.executable, "-m", "nehari_lab.cli", "phase", "--n", "63",
                        "--grid", "3x3", "--out", str(out)], capture_output=True, text=True)
    assert r.returncode in (0, 3)
    doc = json.loads(r.stdout)
    assert "jobs" not in doc["config"] and len(doc["alphas"]) == 3
    assert (out / "phase.csv").exists() and (out / "phase_regions.txt").exists()
