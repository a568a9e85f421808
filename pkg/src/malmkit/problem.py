"""Penalty-problem abstraction and the two merit objectives built on it.

A :class:`PenaltyProblem` supplies ``f``, ``c`` and their first and second
derivatives.  Two scalar objectives are assembled from it:

* :class:`PenaltyObjective` -- ``f(x) + ||c(x)||^2 / (2 omega)``
* :class:`AugLagObjective` -- ``f(x) - lam^T c(x) + ||c(x) + omega lam||^2 / (2 (omega + rho))``

Both are callables ``obj(x, order)`` returning ``(value, grad, hess)`` where
entries above ``order`` are ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class EvaluationError(ArithmeticError):
    """Raised when a problem evaluator returns NaN or Inf."""

    def __init__(self, evaluator: str, x: np.ndarray):
        self.evaluator = evaluator
        self.x = np.array(x, copy=True)
        super().__init__(f"non-finite result from evaluator '{evaluator}'")


def _finite(name, value, x):
    data = value.data if sp.issparse(value) else value
    if not np.all(np.isfinite(data)):
        raise EvaluationError(name, x)
    return value


class PenaltyProblem:
    """Smooth objective ``f`` with residual ``c`` of dimension ``m``.

    Subclasses implement the six evaluators below.  ``jac`` returns the
    ``m x n`` Jacobian; ``hess_c(x, w)`` returns ``sum_i w_i * hess(c_i)(x)``.
    Jacobians and Hessians may be dense arrays or ``scipy.sparse`` matrices.
    Instances must be immutable once constructed.
    """

    n: int
    m: int

    def f(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad_f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess_f(self, x: np.ndarray):
        raise NotImplementedError

    def c(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jac(self, x: np.ndarray):
        raise NotImplementedError

    def hess_c(self, x: np.ndarray, w: np.ndarray):
        raise NotImplementedError

    # checked wrappers used by the objectives
    def _f(self, x):
        return float(_finite("f", np.asarray(self.f(x), dtype=float), x))

    def _c(self, x):
        return _finite("c", np.asarray(self.c(x), dtype=float), x)

    def _grad_f(self, x):
        return _finite("grad_f", np.asarray(self.grad_f(x), dtype=float), x)

    def _jac(self, x):
        J = self.jac(x)
        return _finite("jac", J if sp.issparse(J) else np.asarray(J, dtype=float), x)

    def _hess_f(self, x):
        return _finite("hess_f", self.hess_f(x), x)

    def _hess_c(self, x, w):
        return _finite("hess_c", self.hess_c(x, w), x)


def _gram(J, denom):
    """Return ``J^T J / denom`` in J's storage format."""
    if sp.issparse(J):
        return (J.T @ J).tocsr() / denom
    return (J.T @ J) / denom


def _add(*terms):
    """Sum dense/sparse matrices, staying sparse only if every term is sparse."""
    if all(sp.issparse(t) for t in terms):
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return sp.csr_matrix(out)
    out = np.zeros(terms[0].shape)
    for t in terms:
        out += t.toarray() if sp.issparse(t) else t
    return out


def _check_x(problem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.n},)")
    return x


@dataclass(frozen=True)
class PenaltyObjective:
    """Quadratic penalty objective ``Phi_omega``."""

    problem: PenaltyProblem
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    def __call__(self, x, order=2):
        return eval_phi(self, x, order)


@dataclass(frozen=True)
class AugLagObjective:
    """Modified augmented Lagrangian ``Psi`` at fixed multiplier ``lam``."""

    problem: PenaltyProblem
    omega: float
    rho: float
    lam: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if not self.omega + self.rho > 0:
            raise ValueError("omega + rho must be > 0")
        lam = np.asarray(self.lam, dtype=float)
        if lam.shape != (self.problem.m,) or not np.all(np.isfinite(lam)):
            raise ValueError("lam must be a finite vector of length m")
        object.__setattr__(self, "lam", lam)

    def __call__(self, x, order=2):
        return eval_psi(self, x, order)


def eval_phi(obj: PenaltyObjective, x, order: int = 2):
    """Evaluate ``Phi_omega`` and, up to ``order``, its gradient and Hessian."""
    p, omega = obj.problem, obj.omega
    x = _check_x(p, x)
    cx = p._c(x)
    value = p._f(x) + float(cx @ cx) / (2.0 * omega)
    if order < 1:
        return value, None, None
    J = p._jac(x)
    grad = p._grad_f(x) + (J.T @ cx) / omega
    if order < 2:
        return value, grad, None
    hess = _add(p._hess_f(x), _gram(J, omega), p._hess_c(x, cx / omega))
    return value, grad, hess


def eval_psi(obj: AugLagObjective, x, order: int = 2):
    """Evaluate ``Psi`` and, up to ``order``, its gradient and Hessian.

    With ``lam_t = lam - (c + omega lam) / (omega + rho)`` the gradient is
    ``grad f - J^T lam_t`` and the Hessian
    ``hess f - H_c(lam_t) + J^T J / (omega + rho)``.
    """
    p = obj.problem
    x = _check_x(p, x)
    lam, mu = obj.lam, obj.omega + obj.rho
    cx = p._c(x)
    shifted = cx + obj.omega * lam
    value = p._f(x) - float(lam @ cx) + float(shifted @ shifted) / (2.0 * mu)
    if order < 1:
        return value, None, None
    lam_t = lam - shifted / mu
    J = p._jac(x)
    grad = p._grad_f(x) - J.T @ lam_t
    if order < 2:
        return value, grad, None
    hess = _add(p._hess_f(x), _gram(J, mu), p._hess_c(x, -lam_t))
    return value, grad, hess


@dataclass
class DerivativeCheck:
    """Max relative errors of analytic derivatives against central differences."""

    grad_f: float
    jac: float
    hess_f: float
    hess_c: float

    @property
    def max_error(self) -> float:
        return max(self.grad_f, self.jac, self.hess_f, self.hess_c)


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def _rel_err(approx, exact):
    approx, exact = np.atleast_1d(approx), np.atleast_1d(exact)
    scale = max(1.0, float(np.max(np.abs(exact), initial=0.0)))
    return float(np.max(np.abs(approx - exact), initial=0.0)) / scale


def _central_diff(fun, x, step):
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)


def check_derivatives(problem: PenaltyProblem, x, step: float = 1e-6, weights=None):
    """Compare analytic derivatives of ``problem`` with central differences at ``x``.

    Errors are ``max|fd - exact| / max(1, max|exact|)`` per quantity.  The
    weighted constraint Hessian is checked by differencing ``J(x)^T w``;
    ``weights`` defaults to a fixed deterministic vector.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x = _check_x(problem, x)
    if weights is None:
        weights = np.cos(np.arange(problem.m) + 1.0)
    weights = np.asarray(weights, dtype=float)

    fd_grad = _central_diff(lambda z: problem.f(z), x, step)
    fd_jac = _central_diff(problem.c, x, step)
    fd_hess_f = _central_diff(problem.grad_f, x, step)
    fd_hess_c = _central_diff(lambda z: _dense(problem.jac(z)).T @ weights, x, step)
    return DerivativeCheck(
        grad_f=_rel_err(fd_grad, problem.grad_f(x)),
        jac=_rel_err(fd_jac, _dense(problem.jac(x))),
        hess_f=_rel_err(fd_hess_f, _dense(problem.hess_f(x))),
        hess_c=_rel_err(fd_hess_c, _dense(problem.hess_c(x, weights))),
    )
