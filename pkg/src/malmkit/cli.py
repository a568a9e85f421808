"""Command-line entry point: ``malmkit solve | sweep | trajectory``.

Every flag can also be set through an environment variable named
``MALM_<FLAG>`` (upper case, dashes as underscores), e.g. ``MALM_OMEGA=1e-2``
or ``MALM_OUT_DIR=results``.  Command-line values take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiments, problems
from .experiments import ExperimentGrid, emit_csv, load_grid_spec, run_grid, solve_cell
from .solvers import NotApplicableError

ENV_PREFIX = "MALM_"


def _build_parser():
    parser = argparse.ArgumentParser(prog="malmkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one instance with one method")
    solve.add_argument("--problem", choices=("circle", "ocp"), required=True)
    solve.add_argument("--eps", type=float, default=0.0, help="circle offset (default 0)")
    solve.add_argument("--N", type=int, default=16, help="ocp element count (default 16)")
    solve.add_argument("--omega", type=float, required=True)
    solve.add_argument("--method", choices=("malm", "alm", "qpm"), default="malm")
    solve.add_argument("--tol", type=float, default=1e-8)
    solve.add_argument("--kmax", type=int, default=None, help="outer/inner iteration budget")
    solve.add_argument("--out", type=Path, default=None, help="write the solution vector here")

    sweep = sub.add_parser("sweep", help="run an (omega x eps|N) grid and write CSV tables")
    sweep.add_argument("--grid-spec", type=Path, required=True)
    sweep.add_argument("--out-dir", type=Path, required=True)
    sweep.add_argument("--workers", type=int, default=1)

    traj = sub.add_parser("trajectory", help="sample an ocp solution as t,y,u CSV")
    traj.add_argument("--N", type=int, default=40)
    traj.add_argument("--omega", type=float, required=True)
    traj.add_argument("--samples", type=int, default=201)
    traj.add_argument("--method", choices=("qpm", "malm"), default="qpm")
    traj.add_argument("--tol", type=float, default=1e-8)
    traj.add_argument("--out", type=Path, default=None, help="output file (default stdout)")

    for p in (solve, sweep, traj):
        _apply_env(p)
    return parser


def _apply_env(parser):
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        key = ENV_PREFIX + action.dest.upper().replace("-", "_")
        if key in os.environ:
            action.default = os.environ[key]
            action.required = False


def _cmd_solve(args):
    method = "malm" if args.method == "alm" else args.method
    omega = 0.0 if args.method == "alm" else args.omega
    column = args.eps if args.problem == "circle" else args.N
    grid = ExperimentGrid(args.problem, (omega,), (column,), (method,), k_max=args.kmax, tol=args.tol)
    report = solve_cell(grid, omega, grid.columns[0], method)
    problem = experiments._instance(grid.family, grid.columns[0], grid.q)
    m1, m2 = experiments.metrics(grid.family, problem, report.x_final)
    n1, n2 = grid.metric_names
    summary = {
        "problem": args.problem,
        grid.column_name: grid.columns[0],
        "omega": omega,
        "method": args.method,
        "status": report.status.value,
        "outer_iters": report.outer_iters,
        "inner_iters_total": report.inner_iters_total,
        n1: m1,
        n2: m2,
        "message": report.message,
    }
    if args.out is not None:
        args.out.write_text(experiments.vector_csv(report.x_final))
    print(json.dumps(summary))


def _cmd_sweep(args):
    grid = load_grid_spec(args.grid_spec)
    results = run_grid(grid, workers=int(args.workers))
    for path in emit_csv(grid, results, args.out_dir):
        print(path)


def _cmd_trajectory(args):
    report = experiments.trajectory_study(args.N, (args.omega,), args.method, args.tol)[args.omega]
    problem = problems.ocp(args.N)
    text = experiments.dump_trajectory("ocp", problem, report.x_final, args.samples)
    if not report.converged:
        logging.getLogger(__name__).warning("solve did not converge: %s", report.message)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"solve": _cmd_solve, "sweep": _cmd_sweep, "trajectory": _cmd_trajectory}[args.command]
    try:
        handler(args)
    except NotApplicableError as exc:
        print(f"malmkit: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"malmkit: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"malmkit: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
