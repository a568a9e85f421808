import json
import subprocess
import sys

import pytest

from malmkit.cli import main


def test_solve_prints_summary(capsys):
    assert main(["solve", "--problem", "circle", "--omega", "1e-2", "--method", "qpm"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "converged"
    assert out["inner_iters_total"] == 13
    assert f"{out['e_B']:.1e}" == "8.8e-04"


def test_solve_alm_writes_point(tmp_path, capsys):
    out_file = tmp_path / "x.csv"
    assert main(["solve", "--problem", "circle", "--omega", "0", "--method", "alm", "--out", str(out_file)]) == 0
    assert json.loads(capsys.readouterr().out)["inner_iters_total"] == 16
    assert len(out_file.read_text().splitlines()) == 2


def test_qpm_at_zero_omega_is_a_config_error(capsys):
    assert main(["solve", "--problem", "circle", "--omega", "0", "--method", "qpm"]) == 2
    assert "omega" in capsys.readouterr().err


def test_environment_variables_supply_flags(monkeypatch, capsys):
    monkeypatch.setenv("MALM_OMEGA", "1e-1")
    monkeypatch.setenv("MALM_PROBLEM", "ocp")
    monkeypatch.setenv("MALM_N", "16")
    assert main(["solve", "--method", "qpm"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert (out["N"], out["omega"], out["inner_iters_total"]) == (16, 0.1, 6)


def test_command_line_overrides_environment(monkeypatch, capsys):
    monkeypatch.setenv("MALM_OMEGA", "not-a-number")
    assert main(["solve", "--problem", "circle", "--omega", "1e-1"]) == 0
    assert json.loads(capsys.readouterr().out)["omega"] == 0.1


def test_sweep_writes_tables(tmp_path, capsys):
    spec = tmp_path / "g.ini"
    spec.write_text("[grid]\nproblem = circle\nomegas = 1e-2, 0\ncolumns = 0.1, 0\n")
    assert main(["sweep", "--grid-spec", str(spec), "--out-dir", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "circle_long.csv").exists()
    assert "circle_qpm.csv" in capsys.readouterr().out


def test_sweep_missing_spec_is_io_error(tmp_path):
    assert main(["sweep", "--grid-spec", str(tmp_path / "none.ini"), "--out-dir", str(tmp_path)]) == 1


def test_sweep_bad_spec_is_config_error(tmp_path):
    spec = tmp_path / "g.ini"
    spec.write_text("[grid]\nproblem = circle\n")
    assert main(["sweep", "--grid-spec", str(spec), "--out-dir", str(tmp_path)]) == 2
    spec.write_text("no section here\n")
    assert main(["sweep", "--grid-spec", str(spec), "--out-dir", str(tmp_path)]) == 2


def test_sweep_unwritable_out_dir_is_io_error(tmp_path):
    spec = tmp_path / "g.ini"
    spec.write_text("[grid]\nproblem = circle\nomegas = 1e-1\ncolumns = 0\n")
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["sweep", "--grid-spec", str(spec), "--out-dir", str(blocker)]) == 1


def test_trajectory_to_file(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["trajectory", "--N", "8", "--omega", "1e-1", "--samples", "9", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y,u" and len(lines) == 10


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as info:
        main(["solve", "--problem", "circle"])
    assert info.value.code != 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "malmkit", "trajectory", "--N", "4", "--omega", "1", "--samples", "3"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("t,y,u\n")
