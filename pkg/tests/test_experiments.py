import csv
import io

import numpy as np
import pytest

from malmkit import experiments as ex
from malmkit.problems import CIRCLE_REF, circle, ocp
from malmkit.solvers import MalmConfig, malm_solve

CIRCLE_GRID = ex.ExperimentGrid("circle", (1e-1, 1e-4, 0.0), (1e-2, 0.0))


@pytest.fixture(scope="module")
def circle_results():
    return ex.run_grid(CIRCLE_GRID)


def test_one_result_per_cell_in_grid_order(circle_results):
    keys = [(c.omega, c.column, c.method) for c in circle_results]
    assert keys == list(CIRCLE_GRID.cells())
    assert len(keys) == 3 * 2 * 2


def test_qpm_not_applicable_only_at_zero_omega(circle_results):
    na = [c for c in circle_results if c.status == ex.NOT_APPLICABLE]
    assert {(c.method, c.omega) for c in na} == {("qpm", 0.0)}
    assert ex.cell_payload(na[0]) == "n.a.;;;"


def test_single_cell_grid_matches_direct_solver_call(circle_results):
    direct = malm_solve(circle(1e-2), MalmConfig(omega=1e-4, k_max=1000, max_total_inner=1000), CIRCLE_REF.x0, CIRCLE_REF.lambda0)
    cell = next(c for c in circle_results if (c.method, c.omega, c.column) == ("malm", 1e-4, 1e-2))
    assert cell.inner_iters == direct.inner_iters_total
    np.testing.assert_array_equal(cell.x_final, direct.x_final)


def test_sub_grid_cells_identical(circle_results):
    sub = ex.run_grid(ex.ExperimentGrid("circle", (1e-4,), (0.0,), ("qpm",)))
    full = next(c for c in circle_results if (c.method, c.omega, c.column) == ("qpm", 1e-4, 0.0))
    assert sub[0].inner_iters == full.inner_iters
    np.testing.assert_array_equal(sub[0].x_final, full.x_final)


def test_parallel_run_matches_serial(circle_results):
    par = ex.run_grid(CIRCLE_GRID, workers=3)
    assert ex.long_table(CIRCLE_GRID, par) == ex.long_table(CIRCLE_GRID, circle_results)


def test_emitted_files_and_cardinality(tmp_path, circle_results):
    paths = ex.emit_csv(CIRCLE_GRID, circle_results, tmp_path)
    assert (tmp_path / "circle_malm.csv") in paths and (tmp_path / "circle_qpm.csv") in paths
    rows = list(csv.DictReader(io.StringIO((tmp_path / "circle_long.csv").read_text())))
    assert len(rows) == len(CIRCLE_GRID.omegas) * len(CIRCLE_GRID.columns) * len(CIRCLE_GRID.methods)
    for row in rows:
        if row["status"] != ex.NOT_APPLICABLE:
            x = np.loadtxt(tmp_path / row["point_path"])
            assert x.shape == (2,)
    table = list(csv.reader(io.StringIO((tmp_path / "circle_malm.csv").read_text())))
    assert table[0] == ["omega", "eps=0.01", "eps=0"]
    assert [r[0] for r in table[1:]] == ["1.0e-01", "1.0e-04", "0.0e+00"]
    status, iters, m1, m2 = table[1][2].split(";")
    assert status == "converged" and int(iters) > 0
    assert m1 == "1.1e+00"


def test_long_csv_is_deterministic(tmp_path, circle_results):
    ex.emit_csv(CIRCLE_GRID, circle_results, tmp_path / "a")
    ex.emit_csv(CIRCLE_GRID, ex.run_grid(CIRCLE_GRID), tmp_path / "b")
    assert (tmp_path / "a" / "circle_long.csv").read_bytes() == (tmp_path / "b" / "circle_long.csv").read_bytes()


def test_empty_grid_gives_header_only(tmp_path):
    grid = ex.ExperimentGrid("ocp", (), (16, 64))
    ex.emit_csv(grid, ex.run_grid(grid), tmp_path)
    assert (tmp_path / "ocp_malm.csv").read_text() == "omega,N=16,N=64\n"
    assert (tmp_path / "ocp_long.csv").read_text().count("\n") == 1


def test_converged_points_pass_kkt_feasibility(circle_results):
    from malmkit.solvers import kkt_residual

    for c in circle_results:
        if c.status == ex.CONVERGED:
            feas = kkt_residual(circle(c.column), c.x_final, c.lambda_final, c.omega)[1]
            assert feas <= 1e-8


def test_unwritable_output_names_path(tmp_path, circle_results):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        ex.emit_csv(CIRCLE_GRID, circle_results, blocker)


@pytest.mark.parametrize(
    "value,text", [(8.8388e-3, "8.8e-03"), (-0.2569969625, "-2.6e-01"), (0.0, "0.0e+00"), (None, "")]
)
def test_two_digit_format(value, text):
    assert ex.fmt2(value) == text


def test_parse_grid_spec_round_trip():
    grid = ex.parse_grid_spec(
        "[grid]\nproblem = ocp\nomegas = 1e-1 2.5e-2, 0\ncolumns = 16, 64\nmethods = qpm\nkmax = 20\nlinear_solver = lu\n"
    )
    assert grid.family == "ocp"
    assert grid.omegas == (0.1, 0.025, 0.0)
    assert grid.columns == (16, 64)
    assert grid.methods == ("qpm",)
    assert grid.kmax == 20 and grid.budget == 20
    assert grid.linear_solver == "lu"


@pytest.mark.parametrize(
    "text",
    [
        "problem = circle\n",
        "[grid]\nproblem = square\nomegas = 1\ncolumns = 0\n",
        "[grid]\nproblem = circle\ncolumns = 0\n",
        "[grid]\nproblem = circle\nomegas = 1\ncolumns = 0\ncolour = red\n",
        "[grid]\nproblem = ocp\nomegas = 1\ncolumns = 1.5\n",
        "[grid]\nproblem = circle\nomegas = -1\ncolumns = 0\n",
        "[grid]\nproblem = circle\nomegas = 1\ncolumns = 0\nmethods = newton\n",
    ],
)
def test_bad_grid_specs_rejected(text):
    with pytest.raises(ValueError):
        ex.parse_grid_spec(text)


def test_shipped_grid_specs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "grids"
    assert ex.load_grid_spec(root / "circle.ini").kmax == 1000
    assert ex.load_grid_spec(root / "ocp.ini").columns == (16, 64, 256, 1024)


def test_dump_trajectory_formats():
    assert ex.dump_trajectory("circle", circle(0), np.array([1.0, 1.0])) == "x1,x2\n1.0,1.0\n"
    p = ocp(4)
    text = ex.dump_trajectory("ocp", p, np.zeros(p.n), samples=5)
    assert text.splitlines()[1:] == [f"{float(t)!r},0.0,0.0" for t in np.linspace(0, np.pi / 2, 5)]


def test_state_error_of_interpolated_optimum_is_small():
    from malmkit.problems import ocp_control, ocp_state, ocp_transcription

    p = ocp(40)
    x = ocp_transcription(40).interpolate(ocp_state, ocp_control)
    assert ex.state_error_l2(p, x) < (np.pi / 80) ** 2
    assert ex.state_error_l2(p, np.zeros(p.n)) > 0.1


def test_grid_spec_inline_comments():
    grid = ex.parse_grid_spec("[grid]\nproblem = circle   # family\nomegas = 1e-1, 0  # rows\ncolumns = 0\n")
    assert grid.omegas == (0.1, 0.0)
