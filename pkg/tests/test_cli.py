import json
import os

import numpy as np
import pytest

from contact_hj.cli import main
from contact_hj.grid import GridField

QL_MODEL = {"dim": 1, "kinetic": {"type": "quadratic"},
            "potential": "1 - exp(-x^2)",
            "coupling": {"type": "linear", "phi": "1",
                         "bounds": {"kappa_lo": 1.0, "kappa_hi": 1.0}}}


@pytest.fixture()
def cfg_file(tmp_path):
    data = {"name": "cli-coarse", "model": QL_MODEL, "c": 0.0,
            "grid": {"box": [[-10.0, 10.0]], "shape": [101]},
            "lambdas": [0.2, 0.1], "radii": [3.0, 4.0, 5.0],
            "probes": [0.0, 1.0], "horizon": 20.0,
            "solver": {"tol": 1e-6}, "outdir": str(tmp_path / "out")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path), str(tmp_path / "out")


def test_missing_config_file_is_exit_2(capsys):
    rc = main(["solve", "--config", "/no/such/file.json"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "configuration error" in err
    assert "/no/such/file.json" in err


def test_unknown_preset_is_exit_2(capsys):
    rc = main(["check", "--preset", "nope"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "unknown preset" in err
    assert "quadratic-linear" in err  # the roster is listed


def test_no_config_source_is_exit_2(capsys):
    rc = main(["solve"])
    assert rc == 2
    assert "--config FILE or --preset NAME" in capsys.readouterr().err


def test_bad_override_key_dies_before_compute(cfg_file, capsys):
    path, _ = cfg_file
    rc = main(["solve", "--config", path, "--set", "solver.tolerance=1e-9"])
    assert rc == 2
    assert "tolerance" in capsys.readouterr().err


def test_override_into_scalar_is_exit_2(cfg_file, capsys):
    path, _ = cfg_file
    rc = main(["solve", "--config", path, "--set", "c.inner=1"])
    assert rc == 2
    assert "non-object" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": \n 7,}')
    rc = main(["solve", "--config", str(bad)])
    assert rc == 2
    assert "line" in capsys.readouterr().err


def test_check_preset_writes_report(tmp_path, capsys):
    rc = main(["check", "--preset", "quadratic-linear",
               "--out", str(tmp_path), "--stamp", "t"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "H1: verified-on-samples" in out
    assert "expected split matched" in out
    with open(tmp_path / "check" / "t" / "assumption_report.json") as fh:
        payload = json.load(fh)
    assert payload["passed"]


def test_check_arctan_expected_violations_pass(tmp_path, capsys):
    rc = main(["check", "--preset", "arctan", "--out", str(tmp_path),
               "--stamp", "t"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "H4: violated" in out


def test_critical_prints_estimate(cfg_file, capsys):
    path, out = cfg_file
    rc = main(["critical", "--config", path, "--stamp", "t"])
    assert rc == 0
    assert "c_est = " in capsys.readouterr().out
    with open(os.path.join(out, "critical", "t", "critical.json")) as fh:
        payload = json.load(fh)
    assert len(payload["table"]) == 2
    assert abs(payload["value"]) <= 0.05


def test_solve_writes_field_and_outcome(cfg_file, capsys):
    path, out = cfg_file
    rc = main(["solve", "--config", path, "--lam", "0.2", "--stamp", "t"])
    assert rc == 0
    assert "converged=True" in capsys.readouterr().out
    run = os.path.join(out, "solve", "t")
    field = GridField.from_csv(os.path.join(run, "field.csv"))
    assert field.grid.shape == (101,)
    assert field.meta["lambda"] == 0.2
    with open(os.path.join(run, "outcome.json")) as fh:
        assert json.load(fh)["converged"] is True


def test_solve_quiet_silences_stdout(cfg_file, capsys):
    path, _ = cfg_file
    rc = main(["solve", "--config", path, "--lam", "0.2", "--stamp", "q",
               "--quiet"])
    assert rc == 0
    assert capsys.readouterr().out == ""


def test_ergodic_writes_field(cfg_file):
    path, out = cfg_file
    rc = main(["ergodic", "--config", path, "--stamp", "t"])
    assert rc == 0
    field = GridField.from_csv(os.path.join(out, "ergodic", "t", "field.csv"))
    assert abs(float(field.interpolate(0.0))) <= 1e-9


def test_mane_writes_field(cfg_file):
    path, out = cfg_file
    rc = main(["mane", "--config", path, "--z", "0", "--stamp", "t"])
    assert rc == 0
    field = GridField.from_csv(os.path.join(out, "mane", "t", "field.csv"))
    assert float(field.interpolate(0.0)) == 0.0
    assert np.min(field.values) >= -1e-12


def test_trace_writes_curve_and_summary(cfg_file, capsys):
    path, out = cfg_file
    rc = main(["trace", "--config", path, "--lam", "0.2", "--z", "1",
               "--horizon", "15", "--kind", "K", "--stamp", "t"])
    assert rc == 0
    assert "representation residual" in capsys.readouterr().out
    run = os.path.join(out, "trace", "t")
    with open(os.path.join(run, "trace.json")) as fh:
        summary = json.load(fh)
    assert summary["kind"] == "K"
    assert summary["z"] == 1.0
    assert summary["representation_residual"] <= 0.1
    data = np.loadtxt(os.path.join(run, "curve.csv"), delimiter=",",
                      comments="#")
    assert data.shape[1] == 5
    assert data[0, 0] == 0.0


def test_measure_reports_defects(cfg_file):
    path, out = cfg_file
    rc = main(["measure", "--config", path, "--lam", "0.2", "--z", "1",
               "--stamp", "t", "--quiet"])
    assert rc == 0
    run = os.path.join(out, "measure", "t")
    with open(os.path.join(run, "measure.json")) as fh:
        summary = json.load(fh)
    assert summary["weight_sum"] == pytest.approx(1.0, abs=1e-12)
    assert summary["closedness_defect"] > 0.0
    assert summary["mather_defect"] < 0.5
    data = np.loadtxt(os.path.join(run, "measure.csv"), delimiter=",",
                      comments="#")
    assert data.shape[1] == 3
    assert np.sum(data[:, 2]) == pytest.approx(1.0, abs=1e-12)


def test_z_dimension_mismatch_is_exit_2(cfg_file, capsys):
    path, _ = cfg_file
    rc = main(["trace", "--config", path, "--z", "1,2", "--stamp", "t"])
    assert rc == 2
    assert "--z needs 1 coordinate" in capsys.readouterr().err


def test_localize_passes_at_the_origin(cfg_file, capsys):
    path, _ = cfg_file
    rc = main(["localize", "--config", path, "--z", "0", "--stamp", "t",
               "--workers", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS comparison_sign" in out
    assert "PASS plateau_detected" in out
    assert "passed" in out


def test_sweep_exit_1_on_failed_verdict(cfg_file, capsys):
    # two coarse discounts cannot meet the Cauchy-tail thresholds; the
    # command must say so and exit nonzero
    path, _ = cfg_file
    rc = main(["sweep", "--config", path, "--stamp", "t", "--workers", "2"])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "FAILED" in out
    assert "PASS proxy_matches_mane" in out
