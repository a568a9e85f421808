"""Parameter sweeps over (omega, eps) or (omega, N) and their CSV output."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import problems
from .solvers import MalmConfig, NotApplicableError, SolveReport, malm_solve, qpm_solve
from .problem import EvaluationError
from .quadrature import gauss_legendre
from .transcription import eval_basis, trajectory_csv
from .trm import TrmConfig

logger = logging.getLogger(__name__)

FAMILIES = ("circle", "ocp")
METHODS = ("malm", "qpm")
DEFAULT_KMAX = {"circle": 1000, "ocp": 150}
COLUMN_NAME = {"circle": "eps", "ocp": "N"}
METRIC_NAMES = {"circle": ("e_A", "e_B"), "ocp": ("delta_J", "r")}

CONVERGED, NOT_CONVERGED, NOT_APPLICABLE = "converged", "n.c.", "n.a."


@dataclass(frozen=True)
class ExperimentGrid:
    """A table of solves: one row per omega, one column per eps (circle) or N (ocp).

    ``k_max`` bounds the outer MALM iterations and ``max_total_inner`` the
    summed inner iterations of any method; both default to the family's
    non-convergence threshold (1000 circle, 150 ocp).
    """

    family: str
    omegas: tuple
    columns: tuple
    methods: tuple = METHODS
    k_max: int | None = None
    max_total_inner: int | None = None
    tol: float = 1e-8
    linear_solver: str = "auto"
    q: int = 8

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown problem family {self.family!r}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if any(w < 0 for w in self.omegas):
            raise ValueError("omega values must be nonnegative")
        if self.family == "ocp" and any(int(c) != c or c < 1 for c in self.columns):
            raise ValueError("ocp columns must be positive integers N")
        if self.family == "circle" and any(c < 0 for c in self.columns):
            raise ValueError("circle columns must be nonnegative eps")
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        cast = int if self.family == "ocp" else float
        object.__setattr__(self, "columns", tuple(cast(c) for c in self.columns))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def column_name(self) -> str:
        return COLUMN_NAME[self.family]

    @property
    def metric_names(self) -> tuple:
        return METRIC_NAMES[self.family]

    @property
    def kmax(self) -> int:
        return self.k_max if self.k_max is not None else DEFAULT_KMAX[self.family]

    @property
    def budget(self) -> int:
        return self.max_total_inner if self.max_total_inner is not None else self.kmax

    def cells(self):
        for omega in self.omegas:
            for col in self.columns:
                for method in self.methods:
                    yield omega, col, method


@dataclass
class CellResult:
    method: str
    omega: float
    column: float
    status: str
    inner_iters: int | None = None
    outer_iters: int | None = None
    metrics: tuple | None = None
    x_final: np.ndarray | None = field(default=None, repr=False)
    lambda_final: np.ndarray | None = field(default=None, repr=False)
    message: str = ""
    point_path: str | None = None


@lru_cache(maxsize=16)
def _instance(family, col, q):
    if family == "circle":
        return problems.circle(col)
    return problems.ocp(col, q)


def _starting_point(family, problem):
    if family == "circle":
        return problems.CIRCLE_REF.x0, problems.CIRCLE_REF.lambda0
    return np.zeros(problem.n), np.zeros(problem.m)


def metrics(family, problem, x):
    if family == "circle":
        return problems.metrics_circle(x)
    return problems.metrics_ocp(problem, x)


def solve_cell(grid: ExperimentGrid, omega: float, col, method: str) -> SolveReport:
    """Run one solve exactly as the sweep does and return the raw report."""
    problem = _instance(grid.family, col, grid.q)
    x0, lam0 = _starting_point(grid.family, problem)
    trm = TrmConfig(tol=grid.tol, linear_solver=grid.linear_solver)
    if method == "qpm":
        trm = TrmConfig(tol=grid.tol, linear_solver=grid.linear_solver, max_inner_iters=grid.budget - 1)
        return qpm_solve(problem, omega, trm, x0)
    cfg = MalmConfig(
        omega=omega, tol=grid.tol, k_max=grid.kmax, trm=trm, max_total_inner=grid.budget
    )
    return malm_solve(problem, cfg, x0, lam0)


def run_cell(grid: ExperimentGrid, omega: float, col, method: str) -> CellResult:
    """Solve one cell; failures are recorded in the result, never raised."""
    problem = _instance(grid.family, col, grid.q)
    try:
        report = solve_cell(grid, omega, col, method)
    except NotApplicableError as exc:
        return CellResult(method, omega, col, NOT_APPLICABLE, message=str(exc))
    except EvaluationError as exc:
        return CellResult(method, omega, col, NOT_CONVERGED, message=str(exc))
    status = CONVERGED if report.converged else NOT_CONVERGED
    return CellResult(
        method,
        omega,
        col,
        status,
        inner_iters=report.inner_iters_total,
        outer_iters=report.outer_iters,
        metrics=tuple(float(v) for v in metrics(grid.family, problem, report.x_final)),
        x_final=report.x_final,
        lambda_final=report.lambda_final,
        message=report.message,
    )


def _run_cell_args(args):
    return run_cell(*args)


def run_grid(grid: ExperimentGrid, workers: int = 1) -> list:
    """Solve every cell, ordered by (omega, column, method) regardless of workers."""
    jobs = [(grid, omega, col, method) for omega, col, method in grid.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell_args, jobs))
    results = []
    for job in jobs:
        cell = run_cell(*job)
        logger.info("%s omega=%g %s=%g: %s %s", cell.method, cell.omega, grid.column_name, cell.column, cell.status, cell.inner_iters)
        results.append(cell)
    return results


# ---------------------------------------------------------------- output


def fmt2(value) -> str:
    """Two significant digits in scientific notation, e.g. ``8.8e-03``."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.1e}"


def _column_label(grid, col):
    return f"{grid.column_name}={col:g}" if grid.family == "circle" else f"N={col}"


def cell_payload(cell: CellResult) -> str:
    if cell.status == NOT_APPLICABLE:
        return f"{NOT_APPLICABLE};;;"
    m1, m2 = cell.metrics if cell.metrics else (None, None)
    return ";".join((cell.status, str(cell.inner_iters), fmt2(m1), fmt2(m2)))


def display_table(grid: ExperimentGrid, results, method: str) -> str:
    """CSV text of one method's table: rows keyed by omega, columns by eps or N."""
    lookup = {(c.omega, c.column): c for c in results if c.method == method}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["omega"] + [_column_label(grid, col) for col in grid.columns])
    for omega in grid.omegas:
        row = [fmt2(omega)]
        for col in grid.columns:
            cell = lookup.get((omega, col))
            row.append(cell_payload(cell) if cell else "")
        writer.writerow(row)
    return buf.getvalue()


LONG_HEADER = (
    "family", "method", "omega", "column_name", "column", "status",
    "inner_iters", "outer_iters", "metric1_name", "metric1", "metric2_name", "metric2", "point_path", "message",
)


def long_table(grid: ExperimentGrid, results) -> str:
    """Machine-readable CSV with one row per cell and full-precision values."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LONG_HEADER)
    n1, n2 = grid.metric_names
    for cell in results:
        m1, m2 = cell.metrics if cell.metrics else ("", "")
        writer.writerow(
            [
                grid.family, cell.method, repr(cell.omega), grid.column_name, repr(cell.column),
                cell.status, "" if cell.inner_iters is None else cell.inner_iters,
                "" if cell.outer_iters is None else cell.outer_iters,
                n1, repr(m1) if m1 != "" else "", n2, repr(m2) if m2 != "" else "",
                cell.point_path or "", cell.message,
            ]
        )
    return buf.getvalue()


def vector_csv(x) -> str:
    return "".join(f"{float(v)!r}\n" for v in np.asarray(x).ravel())


def emit_csv(grid: ExperimentGrid, results, out_dir) -> list:
    """Write display tables, the long-format table and limit points under ``out_dir``.

    Returns the list of written paths.  I/O failures raise ``OSError`` naming
    the offending path.
    """
    out = Path(out_dir)
    written = []

    def write(path, text):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    for method in grid.methods:
        write(out / f"{grid.family}_{method}.csv", display_table(grid, results, method))
    for cell in results:
        if cell.x_final is None:
            continue
        name = f"{cell.method}_omega={cell.omega!r}_{grid.column_name}={cell.column!r}.csv"
        path = out / "points" / name
        write(path, vector_csv(cell.x_final))
        cell.point_path = os.path.relpath(path, out)
    write(out / f"{grid.family}_long.csv", long_table(grid, results))
    return written


# ---------------------------------------------------------------- grid specs


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _int_or_none(sec, key):
    value = sec.get(key)
    return None if value is None else int(value)


def parse_grid_spec(text: str) -> ExperimentGrid:
    """Parse an INI-style grid spec with a single ``[grid]`` section.

    Keys: ``problem`` (circle|ocp), ``omegas``, ``columns`` (eps values or N),
    optional ``methods``, ``kmax``, ``budget``, ``tol``, ``linear_solver``, ``q``.
    Lists are comma or whitespace separated; `#` starts a comment.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed grid spec: {exc}") from None
    if "grid" not in parser:
        raise ValueError("grid spec needs a [grid] section")
    sec = parser["grid"]
    unknown = set(sec) - {"problem", "omegas", "columns", "methods", "kmax", "budget", "tol", "linear_solver", "q"}
    if unknown:
        raise ValueError(f"unknown grid spec keys: {sorted(unknown)}")
    try:
        family = sec["problem"].strip()
        omegas = _floats(sec["omegas"])
        columns = _floats(sec["columns"])
    except KeyError as exc:
        raise ValueError(f"grid spec is missing key {exc}") from None
    methods = tuple(m.strip() for m in sec.get("methods", "malm, qpm").replace(",", " ").split())
    return ExperimentGrid(
        family=family,
        omegas=omegas,
        columns=columns,
        methods=methods,
        k_max=_int_or_none(sec, "kmax"),
        max_total_inner=_int_or_none(sec, "budget"),
        tol=sec.getfloat("tol", 1e-8),
        linear_solver=sec.get("linear_solver", "auto").strip(),
        q=sec.getint("q", 8),
    )


def load_grid_spec(path) -> ExperimentGrid:
    return parse_grid_spec(Path(path).read_text())


# ---------------------------------------------------------------- trajectories


def dump_trajectory(family: str, problem, x, samples: int = 201) -> str:
    """CSV text of a solution: ``t,y,u`` samples for ocp, one ``x1,x2`` row for circle."""
    if family == "circle":
        x = np.asarray(x, dtype=float)
        return f"x1,x2\n{float(x[0])!r},{float(x[1])!r}\n"
    return trajectory_csv(problem.trans, x, samples)


def trajectory_study(N: int = 40, omegas=(1e2, 1e-1, 1e-4), method: str = "qpm", tol: float = 1e-8):
    """Solve the OCP on ``N`` elements for each omega; returns ``{omega: SolveReport}``."""
    grid = ExperimentGrid("ocp", tuple(omegas), (N,), (method,), tol=tol)
    return {omega: solve_cell(grid, omega, N, method) for omega in grid.omegas}


def state_error_l2(problem, x, q: int = 8) -> float:
    """L2 distance on ``[0, T]`` between the discrete state and the analytic optimum.

    Integrated with a ``q``-point Gauss-Legendre rule on every mesh element.
    """
    trans = problem.trans
    mesh = trans.mesh
    ref = gauss_legendre(q, 0.0, 1.0)
    t = ((np.arange(mesh.N)[:, None] + ref.nodes[None, :]) * mesh.h).ravel()
    w = np.tile(ref.weights * mesh.h, mesh.N)
    y, _ = eval_basis(mesh, trans.split(x)[0], t, "state", trans.ocp.initial_state)
    return float(np.sqrt(w @ (y - problems.ocp_state(t)) ** 2))
