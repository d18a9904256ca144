import json

import numpy as np
import pytest

from threecircles.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION, dumps, emit_report, run
from threecircles.verifier import CheckReport


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding=None)


def test_verify_catenoid_passes(tmp_path):
    code = run(["verify", "--preset", "catenoid", "--field", "N1", "--m", "auto", "--T", "2", "--out", str(tmp_path)])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert set(doc) == {"run_id", "config_echo", "reports"}
    assert all(r["holds"] for r in doc["reports"])
    assert {r["name"] for r in doc["reports"]} >= {"identities", "sobolev_inequalities", "three_circles", "l2_inequalities"}


def test_poincare_csv(tmp_path):
    assert run(["poincare", "--preset", "zero", "--lambda", "1", "--span", "0", "1", "--out", str(tmp_path)]) == EXIT_OK
    row = read_csv(tmp_path / "poincare.csv")
    np.testing.assert_allclose([row["p11"], row["p12"], row["p21"], row["p22"]], [1.5431, 1.1752, 1.1752, 1.5431], atol=1e-4)


def test_catenoid_scan_csv(tmp_path):
    assert run(["catenoid", "--scan", "-0.9", "-0.1", "--steps", "17", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "catenoid_scan.csv")
    assert rows.size == 34
    assert np.all(rows["growing_coefficient"] != 0)


def test_catenoid_closed_form_check(tmp_path):
    assert run(["catenoid", "--out", str(tmp_path)]) == EXIT_OK


@pytest.mark.parametrize(
    "argv",
    [
        ["basis", "--kind", "cluster", "--n", "2", "--clusters", "3"],
        ["evolve", "--preset", "random_band", "--param", "seed=3", "--field", "random:1"],
        ["profile", "--preset", "zero", "--field", "exp:2:cos:+", "--m", "3"],
        ["perturb", "--preset", "zero", "--T", "1"],
    ],
)
def test_other_subcommands(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path)]) == EXIT_OK
    assert list(tmp_path.glob("*.csv")) and list(tmp_path.glob("*.json"))


def test_usage_errors_exit_one(tmp_path):
    assert run(["bogus"]) == EXIT_ERROR
    assert run(["verify", "--preset", "zero", "--field", "exp:x", "--out", str(tmp_path)]) == EXIT_ERROR
    assert run(["verify", "--preset", "zero", "--field", "N1", "--out", str(tmp_path)]) == EXIT_ERROR
    assert run(["verify", "--config", str(tmp_path / "missing.ini")]) == EXIT_ERROR
    assert run(["verify", "--h", "-1"]) == EXIT_ERROR


def test_config_file_and_determinism(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[potential]\npreset = random_band\nseed = 5\n\n[run]\nT = 1\nfield = random:2\nk_max = 3\n")
    for d in ("a", "b"):
        assert run(["verify", "--config", str(cfg), "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "verify.json").read_bytes() == (tmp_path / "b" / "verify.json").read_bytes()
    doc = json.loads((tmp_path / "a" / "verify.json").read_text())
    assert doc["config_echo"]["params"] == {"seed": 5}


def test_emit_report(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "x.json")
    ok = CheckReport("demo", True, 0.123456789012345, 1.0)
    assert emit_report([ok], tmp_path / "ok.json") == EXIT_OK
    doc = json.loads((tmp_path / "ok.json").read_text())
    assert doc["reports"][0]["worst_margin"] == 0.123456789012
    bad = CheckReport("demo", False, -1.0, 0.5)
    assert emit_report([ok, bad], tmp_path / "bad.json") == EXIT_VIOLATION


def test_violation_exit_code(tmp_path, monkeypatch):
    from threecircles import cli, verifier

    monkeypatch.setattr(verifier, "run_all", lambda *a, **k: [CheckReport("forced", False, -1.0, 0.0)])
    code = cli.run(["verify", "--preset", "zero", "--field", "exp:1:cos:+", "--out", str(tmp_path)])
    assert code == EXIT_VIOLATION


def test_dumps_is_canonical():
    assert dumps({"b": 1.0 / 3, "a": float("inf")}) == '{\n  "a": "inf",\n  "b": 0.333333333333\n}\n'
