"""Simplified trust-region Newton method.

Each iteration solves ``(H + sigma I) d = -g`` for an increasing ladder of
shifts ``sigma`` until the trial point does not increase the objective.  The
shift plays the role of an implicit trust-region radius; there is no ratio
test and no line search.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

logger = logging.getLogger(__name__)


class TrmStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    SHIFT_OVERFLOW = "shift_overflow"
    LINEAR_SOLVE_FAILURE = "linear_solve_failure"
    STALLED = "stalled"


LINEAR_SOLVERS = ("auto", "lu", "ldl", "banded")


class SingularShiftError(np.linalg.LinAlgError):
    """The shifted system ``H + sigma I`` could not be factorized."""


@dataclass(frozen=True)
class TrmConfig:
    """Settings for :func:`trm_minimize`.

    ``accept_ties`` controls the decrease test: ``phi(trial) <= phi(x)`` when
    true, strict ``<`` when false.  ``linear_solver`` selects the shifted
    solve, see :func:`shifted_solve`.
    """

    tol: float = 1e-8
    sigma0: float = 1e-11
    sigma_growth: float = 10.0
    sigma_max: float = 1e30
    max_inner_iters: int = 10_000
    accept_ties: bool = True
    linear_solver: str = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.sigma_growth > 1:
            raise ValueError("sigma_growth must exceed 1")
        if not self.sigma_max > self.sigma0:
            raise ValueError("sigma_max must exceed sigma0")
        if self.max_inner_iters < 0:
            raise ValueError("max_inner_iters must be nonnegative")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ValueError(f"unknown linear_solver {self.linear_solver!r}")


@dataclass
class TrmReport:
    x_final: np.ndarray
    iters: int
    gradient_tests: int
    total_linear_solves: int
    status: TrmStatus
    grad_norm: float
    value: float
    sigmas: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status is TrmStatus.CONVERGED


def _banded_solve(A, rhs):
    A = sp.csr_matrix(A)
    perm = reverse_cuthill_mckee(A, symmetric_mode=True)
    P = A[perm][:, perm].tocoo()
    offsets = P.row - P.col
    lower = max(int(offsets.max(initial=0)), 0)
    upper = max(int(-offsets.min(initial=0)), 0)
    ab = np.zeros((lower + upper + 1, A.shape[0]))
    ab[upper + P.row - P.col, P.col] = P.data
    y = la.solve_banded((lower, upper), ab, rhs[perm], check_finite=False)
    out = np.empty_like(y)
    out[perm] = y
    return out


def shifted_solve(H, g, sigma: float, method: str = "auto") -> np.ndarray:
    """Return ``d`` with ``(H + sigma I) d = -g``.

    ``method``:

    ``"lu"``
        dense LU with partial pivoting (LAPACK ``gesv``)
    ``"ldl"``
        dense symmetric indefinite Bunch-Kaufman (LAPACK ``sysv``)
    ``"banded"``
        reverse Cuthill-McKee reordering, then banded LU (``gbsv``)
    ``"auto"``
        ``"banded"`` for ``scipy.sparse`` input, ``"lu"`` otherwise

    Raises :class:`SingularShiftError` when the factorization breaks down or
    yields a non-finite step.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if method not in LINEAR_SOLVERS:
        raise ValueError(f"unknown linear solver {method!r}")
    g = np.asarray(g, dtype=float)
    n = g.size
    if method == "auto":
        method = "banded" if sp.issparse(H) else "lu"
    try:
        if method == "banded":
            A = sp.csr_matrix(H) + sigma * sp.identity(n, format="csr")
            d = _banded_solve(A, -g)
        else:
            A = H.toarray() if sp.issparse(H) else np.array(H, dtype=float)
            A[np.diag_indices(n)] += sigma
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", la.LinAlgWarning)
                d = la.solve(A, -g, assume_a="sym" if method == "ldl" else "gen", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularShiftError(str(exc)) from exc
    if not np.all(np.isfinite(d)):
        raise SingularShiftError("non-finite step")
    return d


def trm_minimize(phi, x0, cfg: TrmConfig | None = None) -> TrmReport:
    """Minimize ``phi`` from ``x0``.

    ``phi(x, order)`` must return ``(value, grad, hess)`` with entries above
    ``order`` allowed to be ``None``.

    The loop runs while ``||grad||_inf > tol``.  Per iteration the shift
    restarts at ``sigma0`` and is multiplied by ``sigma_growth`` *before*
    each solve, so the first attempted shift is ``sigma0 * sigma_growth``.
    A step is taken once the trial value passes the decrease test.

    Exits other than convergence: ``shift_overflow`` (shift passed
    ``sigma_max`` without decrease), ``linear_solve_failure`` (no attempted
    shift could be factorized), ``stalled`` (an accepted tie left ``x``
    bitwise unchanged, so the iteration would repeat forever) and
    ``max_iters``.
    """
    cfg = cfg or TrmConfig()
    x = np.array(x0, dtype=float)
    value, grad, hess = phi(x, 2)
    tests, iters, solves = 1, 0, 0
    sigmas = []

    def report(status):
        return TrmReport(
            x_final=x,
            iters=iters,
            gradient_tests=tests,
            total_linear_solves=solves,
            status=status,
            grad_norm=float(np.max(np.abs(grad), initial=0.0)),
            value=value,
            sigmas=sigmas,
        )

    while np.max(np.abs(grad), initial=0.0) > cfg.tol:
        if iters >= cfg.max_inner_iters:
            return report(TrmStatus.MAX_ITERS)
        sigma = cfg.sigma0
        any_factorized = False
        while True:
            sigma *= cfg.sigma_growth
            if sigma > cfg.sigma_max:
                status = (
                    TrmStatus.SHIFT_OVERFLOW if any_factorized else TrmStatus.LINEAR_SOLVE_FAILURE
                )
                logger.debug("trm: %s at iteration %d", status.value, iters + 1)
                return report(status)
            solves += 1
            try:
                d = shifted_solve(hess, grad, sigma, cfg.linear_solver)
            except SingularShiftError:
                continue
            any_factorized = True
            trial = x + d
            trial_value = phi(trial, 0)[0]
            if trial_value < value or (cfg.accept_ties and trial_value == value):
                break
        if np.array_equal(trial, x):
            return report(TrmStatus.STALLED)
        iters += 1
        sigmas.append(sigma)
        x = trial
        value, grad, hess = phi(x, 2)
        tests += 1
    return report(TrmStatus.CONVERGED)
