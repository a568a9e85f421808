"""Outer methods for quadratic penalty programs.

* :func:`qpm_solve` minimizes ``Phi_omega`` directly with the trust-region
  Newton method.
* :func:`malm_solve` is the modified augmented Lagrangian method.  Each outer
  iteration minimizes ``Psi_k`` at fixed multipliers, then applies

      lam_k = lam_{k-1} - (c(x_k) + omega lam_{k-1}) / (omega + rho)

  and stops once ``||c(x_k) + omega lam_k||_inf <= tol``.  With ``omega = 0``
  this is the classical augmented Lagrangian method.

Iteration counts follow the benchmark tables: every inner solve contributes
its number of gradient tests, i.e. accepted steps plus one.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .problem import AugLagObjective, PenaltyObjective, PenaltyProblem
from .trm import TrmConfig, TrmReport, TrmStatus, trm_minimize

logger = logging.getLogger(__name__)


class NotApplicableError(ValueError):
    """The method is undefined for the requested parameters (QPM at omega <= 0)."""


class SolveStatus(str, enum.Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"
    SUBPROBLEM_FAILURE = "subproblem_failure"


@dataclass(frozen=True)
class MalmConfig:
    """Parameters of :func:`malm_solve`.

    ``max_total_inner`` optionally caps the summed inner iteration count;
    exhausting it ends the solve as not converged.
    """

    omega: float = 0.0
    tol: float = 1e-8
    rho0: float = 0.1
    c_rho: float = 0.1
    k_max: int = 100
    rho_min: float = 1e-12
    trm: TrmConfig = field(default_factory=TrmConfig)
    max_total_inner: int | None = None

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.rho0 > 0 or not self.rho_min > 0:
            raise ValueError("rho0 and rho_min must be positive")
        if not 0 < self.c_rho < 1:
            raise ValueError("c_rho must lie in (0, 1)")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")


@dataclass
class DualState:
    lam: np.ndarray
    rho: float


@dataclass
class OuterRecord:
    k: int
    inner_iters: int
    trm_status: str
    rho: float
    feasibility: float
    value: float


@dataclass
class SolveReport:
    x_final: np.ndarray
    lambda_final: np.ndarray
    outer_iters: int
    inner_iters_total: int
    status: SolveStatus
    history: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


def _as_vector(v, size, name):
    v = np.array(v, dtype=float)
    if v.shape != (size,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({size},)")
    return v


def malm_solve(problem: PenaltyProblem, cfg: MalmConfig, x0, lambda0) -> SolveReport:
    """Run the modified augmented Lagrangian method from ``(x0, lambda0)``.

    The inner tolerance equals ``cfg.tol``.  ``rho`` is multiplied by
    ``c_rho`` after every unsuccessful outer iteration, floored at
    ``rho_min``.
    """
    x = _as_vector(x0, problem.n, "x0")
    dual = DualState(_as_vector(lambda0, problem.m, "lambda0"), cfg.rho0)
    omega = cfg.omega
    trm_cfg = replace(cfg.trm, tol=cfg.tol)
    total = 0
    history = []

    def done(status, k, message=""):
        return SolveReport(x, dual.lam, k, total, status, history, message)

    for k in range(1, cfg.k_max + 1):
        budget_limited = False
        if cfg.max_total_inner is not None:
            remaining_steps = cfg.max_total_inner - total - 1
            if remaining_steps < 0:
                return done(SolveStatus.NOT_CONVERGED, k - 1, "inner iteration budget exhausted")
            if remaining_steps < trm_cfg.max_inner_iters:
                budget_limited = True
                inner_cfg = replace(trm_cfg, max_inner_iters=remaining_steps)
            else:
                inner_cfg = trm_cfg
        else:
            inner_cfg = trm_cfg

        psi = AugLagObjective(problem, omega, dual.rho, dual.lam)
        inner: TrmReport = trm_minimize(psi, x, inner_cfg)
        total += inner.gradient_tests
        x = inner.x_final
        if not inner.converged:
            history.append(OuterRecord(k, inner.gradient_tests, inner.status.value, dual.rho, np.nan, inner.value))
            if inner.status is TrmStatus.MAX_ITERS and budget_limited:
                return done(SolveStatus.NOT_CONVERGED, k, "inner iteration budget exhausted")
            logger.debug("malm: inner solve failed at k=%d (%s)", k, inner.status.value)
            return done(SolveStatus.SUBPROBLEM_FAILURE, k, f"inner solve {inner.status.value} at outer iteration {k}")

        cx = problem._c(x)
        dual.lam = dual.lam - (cx + omega * dual.lam) / (omega + dual.rho)
        feas = float(np.max(np.abs(cx + omega * dual.lam), initial=0.0))
        history.append(OuterRecord(k, inner.gradient_tests, inner.status.value, dual.rho, feas, inner.value))
        if feas <= cfg.tol:
            return done(SolveStatus.CONVERGED, k)
        dual.rho = max(cfg.c_rho * dual.rho, cfg.rho_min)

    return done(SolveStatus.NOT_CONVERGED, cfg.k_max, "outer iteration limit reached")


def qpm_solve(problem: PenaltyProblem, omega: float, trm: TrmConfig | None = None, x0=None) -> SolveReport:
    """Minimize ``Phi_omega`` with one trust-region Newton run.

    ``lambda_final`` is ``-c(x) / omega``, the multiplier for which the
    penalty optimality conditions hold.
    """
    if not omega > 0:
        raise NotApplicableError(f"QPM needs omega > 0, got {omega}")
    trm = trm or TrmConfig()
    x0 = np.zeros(problem.n) if x0 is None else _as_vector(x0, problem.n, "x0")
    inner = trm_minimize(PenaltyObjective(problem, omega), x0, trm)
    x = inner.x_final
    lam = -problem._c(x) / omega
    if inner.converged:
        status, message = SolveStatus.CONVERGED, ""
    elif inner.status is TrmStatus.MAX_ITERS:
        status, message = SolveStatus.NOT_CONVERGED, "iteration limit reached"
    else:
        status, message = SolveStatus.SUBPROBLEM_FAILURE, f"trust-region solve {inner.status.value}"
    record = OuterRecord(1, inner.gradient_tests, inner.status.value, np.nan, float(np.max(np.abs(problem._c(x) + omega * lam))), inner.value)
    return SolveReport(x, lam, 1, inner.gradient_tests, status, [record], message)


def kkt_residual(problem: PenaltyProblem, x, lam, omega: float):
    """``(||grad f - J^T lam||_inf, ||c + omega lam||_inf)`` at ``(x, lam)``."""
    x = _as_vector(x, problem.n, "x")
    lam = _as_vector(lam, problem.m, "lambda")
    stationarity = problem.grad_f(x) - problem.jac(x).T @ lam
    feasibility = problem.c(x) + omega * lam
    return float(np.max(np.abs(stationarity), initial=0.0)), float(np.max(np.abs(feasibility), initial=0.0))
