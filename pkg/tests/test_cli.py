"""CLI tests: exit codes, report JSON round-trips and CSV artifacts."""

import csv
import json
import os
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from rsd.cli import Report, load_config, main
from rsd.riccati import solve_dare_symplectic

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
R1_CONFIG = str(CONFIG_DIR / "two_state_r1.json")
R2_CONFIG = str(CONFIG_DIR / "two_state_r2.json")
DESIGN_CONFIG = str(CONFIG_DIR / "two_state_design.json")

GAMMA_WINDOW = (0.5472, 0.5672)


def _write_config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def _base_config():
    return json.loads(Path(R1_CONFIG).read_text())


# ----------------------------------------------------------- exit codes

def test_validate_success(capsys):
    assert main(["validate", "-c", R1_CONFIG]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out


def test_malformed_json_exit_1(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "system": nope\n}')
    assert main(["validate", "-c", str(path)]) == 1
    err = capsys.readouterr().err
    assert "config error" in err
    assert "line 2" in err and "column" in err


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["validate", "-c", str(tmp_path / "absent.json")]) == 1
    assert "config error" in capsys.readouterr().err


def test_singular_A_exit_2(tmp_path, capsys):
    cfg = _base_config()
    cfg["system"]["A"] = [[1.0, 0.0], [2.0, 0.0]]
    path = _write_config(tmp_path, "singular.json", cfg)
    assert main(["validate", "-c", path]) == 2
    err = capsys.readouterr().err
    assert "validation failure" in err
    assert "singular" in err


def test_uncontrollable_exit_2(tmp_path, capsys):
    cfg = _base_config()
    cfg["system"]["Q"] = [[0.0, 0.0], [0.0, 0.0]]
    path = _write_config(tmp_path, "deterministic.json", cfg)
    assert main(["validate", "-c", path]) == 2
    assert "not controllable" in capsys.readouterr().err


def test_unobservable_base_exit_2_on_validate(tmp_path, capsys):
    cfg = _base_config()
    cfg["base_sensors"] = [{"C": [[1.0, 0.0]], "R": [[1.0]]}]
    path = _write_config(tmp_path, "unobservable.json", cfg)
    assert main(["validate", "-c", path]) == 2
    assert "observable" in capsys.readouterr().err


def test_unobservable_dare_exit_3(tmp_path, capsys):
    cfg = _base_config()
    cfg["base_sensors"] = [{"C": [[1.0, 0.0]], "R": [[1.0]]}]
    del cfg["redundant_sensors"]
    path = _write_config(tmp_path, "unobservable.json", cfg)
    assert main(["dare", "-c", path]) == 3
    err = capsys.readouterr().err
    assert "solver failure" in err
    assert "not observable" in err


def test_analyze_requires_redundant_exit_1(capsys):
    assert main(["analyze", "-c", DESIGN_CONFIG]) == 1
    assert "redundant_sensors" in capsys.readouterr().err


def test_simulate_steps_below_burn_in_exit_1(capsys):
    assert main(["simulate", "-c", R1_CONFIG, "--steps", "100"]) == 1
    err = capsys.readouterr().err
    assert "config error" in err
    assert "burn_in" in err


def test_design_infeasible_exit_4(tmp_path, capsys):
    cfg = json.loads(Path(DESIGN_CONFIG).read_text())
    cfg["design"]["norm_bound"] = 1e-6
    path = _write_config(tmp_path, "tiny_u.json", cfg)
    assert main(["design", "-c", path]) == 4
    err = capsys.readouterr().err
    assert "design infeasibility" in err
    assert "iteration 0" in err
    assert "norm bound" in err


def test_design_section_missing_entry_exit_1(tmp_path, capsys):
    cfg = json.loads(Path(DESIGN_CONFIG).read_text())
    del cfg["design"]["norm_bound"]
    path = _write_config(tmp_path, "incomplete.json", cfg)
    assert main(["design", "-c", path]) == 1
    assert "config.design.norm_bound" in capsys.readouterr().err


def test_sensor_dimension_mismatch_exit_1(tmp_path, capsys):
    cfg = _base_config()
    cfg["base_sensors"][0]["C"] = [[1.0, 0.0, 0.0]]
    path = _write_config(tmp_path, "mismatch.json", cfg)
    assert main(["validate", "-c", path]) == 1
    assert "config.base_sensors" in capsys.readouterr().err


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dare"])  # missing -c
    assert exc.value.code == 1
    assert "config error" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "rsd" in capsys.readouterr().out


# --------------------------------------------------- reports and values

def test_dare_report_values(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    assert main(["dare", "-c", R1_CONFIG, "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    assert report.command == "dare"
    P = np.array(report.results["base"]["P"])
    assert P == pytest.approx(np.diag([0.39672161, 0.49005050]), abs=1e-6)
    assert report.results["augmented"]["trace"] == pytest.approx(
        0.7929881868436531, abs=1e-9)
    assert report.verdicts["cross_method_agreement"] is True
    assert report.verdicts["worst_discrepancy"] <= 1e-7


def test_dare_report_roundtrip_bit_exact(tmp_path):
    out_path = tmp_path / "report.json"
    assert main(["dare", "-c", R1_CONFIG, "--out", str(out_path)]) == 0
    text = out_path.read_text()
    # parse -> serialize reproduces the file byte for byte
    assert Report.from_json(text).to_json() + "\n" == text
    # matrix entries survive the round trip bit-exactly
    cfg = load_config(R1_CONFIG)
    sol, _ = solve_dare_symplectic(cfg.sys, cfg.base.G, bank=cfg.base)
    data = json.loads(text)
    assert data["results"]["base"]["P"] == sol.P.tolist()
    assert data["results"]["base"]["gain"] == sol.K.tolist()


def test_dare_single_method(tmp_path):
    out_path = tmp_path / "report.json"
    assert main(["dare", "-c", R1_CONFIG, "--method", "fixed",
                 "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    assert report.results["base"]["method"] == "fixed_point"
    assert "discrepancy" not in report.results["base"]
    assert main(["dare", "-c", R1_CONFIG, "--method", "symplectic",
                 "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    assert report.results["base"]["method"] == "symplectic"
    assert report.results["base"]["unit_circle_margin"] > 0


def test_analyze_kernel_case(tmp_path):
    out_path = tmp_path / "report.json"
    assert main(["analyze", "-c", R1_CONFIG, "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    v = report.verdicts
    assert v["classification"] == "GreaterWithKernel"
    assert v["kernel_dimension"] == 1
    assert v["strict_improvement"] is False
    assert v["no_shared_stable_eigenpair"] is False
    assert v["spectral_test_consistent"] is True
    # kernel is the second coordinate axis
    basis = np.abs(np.array(report.results["kernel_basis"][0])).ravel()
    assert basis == pytest.approx([0.0, 1.0], abs=1e-8)
    # the shared symplectic eigenvalue, serialized as {real, imag}
    pair = report.results["shared_eigenpairs"][0]
    assert pair[0]["real"] == pytest.approx(0.44531681494643177, abs=1e-9)
    assert pair[0]["imag"] == pytest.approx(0.0, abs=1e-12)
    assert report.results["trace_gap"] == pytest.approx(
        0.09378392108886191, abs=1e-9)
    assert report.diagnostics["lyapunov_identity_residual"] < 1e-10


def test_analyze_strict_case(tmp_path):
    out_path = tmp_path / "report.json"
    assert main(["analyze", "-c", R2_CONFIG, "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    v = report.verdicts
    assert v["classification"] == "StrictlyGreater"
    assert v["kernel_dimension"] == 0
    assert v["strict_improvement"] is True
    assert v["no_shared_stable_eigenpair"] is True
    assert v["spectral_test_consistent"] is True
    assert report.results["inertia_priori"] == [2, 0, 0]
    assert report.results["inertia_posteriori"] == [2, 0, 0]


def test_analyze_zero_information_warning(tmp_path, capsys):
    cfg = _base_config()
    cfg["redundant_sensors"] = [{"C": [[0.0, 0.0]], "R": [[1.0]]}]
    path = _write_config(tmp_path, "zero.json", cfg)
    out_path = tmp_path / "report.json"
    assert main(["analyze", "-c", path, "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    assert report.verdicts["classification"] == "Equal"
    assert report.verdicts["warnings"]
    assert "no information" in report.verdicts["warnings"][0]
    assert "warning" in capsys.readouterr().out


def test_design_run(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    csv_dir = tmp_path / "csv"
    assert main(["design", "-c", DESIGN_CONFIG, "--out", str(out_path),
                 "--csv-dir", str(csv_dir)]) == 0
    report = Report.from_json(out_path.read_text())
    gamma = report.results["gamma_star"]
    assert GAMMA_WINDOW[0] < gamma < GAMMA_WINDOW[1]
    assert report.verdicts["status"] == "converged"
    assert report.verdicts["converged"] is True
    assert report.verdicts["rows_within_budget"] is True
    assert report.verdicts["post_validation_pass"] is True
    assert report.results["iterations"] <= 20
    for norm in report.results["row_block_norms"]:
        assert norm == pytest.approx(5.0, abs=1e-2)
    assert report.results["residuals"]["x_inverse_vs_dare"] < 1e-4
    # trajectory CSV mirrors the report bit for bit
    with open(csv_dir / "gamma_trajectory.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "gamma"]
    assert len(rows) - 1 == len(report.results["gamma_trajectory"])
    assert [float(r[1]) for r in rows[1:]] == list(
        report.results["gamma_trajectory"])
    assert float(rows[-1][1]) == gamma


def test_simulate_report_and_overrides(tmp_path):
    out_path = tmp_path / "report.json"
    assert main(["simulate", "-c", R2_CONFIG, "--steps", "800",
                 "--trials", "2", "--seed", "7",
                 "--out", str(out_path)]) == 0
    report = Report.from_json(out_path.read_text())
    assert report.results["steps"] == 800
    assert report.results["trials"] == 2
    assert report.results["seed"] == 7
    assert set(report.results["networks"]) == {"base", "augmented"}
    ratios = report.results["variance_ratios"]["augmented_vs_base"]
    assert all(v < 0.9 for v in ratios)
    for entry in report.results["networks"].values():
        emp = np.array(entry["empirical_covariance"])
        assert emp.shape == (2, 2)
        assert entry["max_relative_variance_error"] < 0.25


def test_simulate_csv_determinism(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for directory in dirs:
        assert main(["simulate", "-c", R2_CONFIG, "--steps", "800",
                     "--csv-dir", str(directory)]) == 0
    for label in ("base", "augmented"):
        for name in ("trajectory.csv", "histogram_1.csv",
                     "histogram_2.csv"):
            first = (dirs[0] / label / name).read_bytes()
            second = (dirs[1] / label / name).read_bytes()
            assert first == second
    header = (dirs[0] / "base" / "trajectory.csv").read_text().splitlines()
    assert header[0] == "k,e_1,e_2"


def test_console_script_and_logging():
    exe = shutil.which("rsd")
    assert exe is not None, "console script rsd not installed"
    proc = subprocess.run(
        [exe, "validate", "-c", R1_CONFIG],
        capture_output=True, text=True,
        env={**os.environ, "RSD_LOG": "info"},
    )
    assert proc.returncode == 0
    assert "all checks passed" in proc.stdout
    assert "INFO rsd.cli" in proc.stderr
