"""Integral-penalty finite-element transcription of a scalar optimal control problem.

States and controls are continuous piecewise-linear on a uniform mesh of
``N`` elements over ``[0, T]``.  The coefficient vector is

    x = [y_h(h), ..., y_h(N h), u_h(0), ..., u_h(N h)]        (n = 2N + 1)

with ``y_h(0)`` fixed to the initial state.  With Gauss-Legendre points
``tau_j`` and weights ``alpha_j`` (``q`` per element, ``m = N q``):

    f(x)   = sum_j alpha_j L(tau_j, y_h(tau_j), u_h(tau_j))
    c_j(x) = sqrt(alpha_j) (-y_h'(tau_j) + g(tau_j, y_h(tau_j), u_h(tau_j)))

so ``||c(x)||_2`` is the quadrature value of the L2 norm of the dynamics
residual.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp

from .problem import PenaltyProblem
from .quadrature import QuadratureRule, gauss_legendre


class Partials(NamedTuple):
    """Value and partial derivatives of a scalar function of ``(t, y, u)``."""

    value: np.ndarray
    y: np.ndarray
    u: np.ndarray
    yy: np.ndarray
    yu: np.ndarray
    uu: np.ndarray


@dataclass(frozen=True)
class OcpDefinition:
    """``min int_0^T L(t, y, u) dt`` subject to ``y' = g(t, y, u)``, ``y(0) = y0``.

    ``running_cost`` and ``dynamics_rhs`` take arrays ``(t, y, u)`` and
    return :class:`Partials`.
    """

    horizon: float
    initial_state: float
    running_cost: Callable[..., Partials]
    dynamics_rhs: Callable[..., Partials]

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class Mesh:
    N: int
    T: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    def locate(self, t):
        """Element index and local coordinate in ``[0, 1]`` for times ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-14)):
            raise ValueError(f"t outside horizon [0, {self.T}]")
        e = np.clip(np.floor(t / self.h).astype(int), 0, self.N - 1)
        return e, t / self.h - e


def eval_basis(mesh: Mesh, coeffs, t, kind: str = "state", initial: float = 0.0):
    """Evaluate a piecewise-linear function and its slope at times ``t``.

    ``kind="state"`` expects the ``N`` free nodal values ``y(h), ..., y(Nh)``
    and prepends ``initial``; ``kind="control"`` expects all ``N + 1`` values.
    At interior nodes the slope of the element to the right is returned.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if kind == "state":
        if coeffs.shape != (mesh.N,):
            raise ValueError(f"state coefficients must have length {mesh.N}")
        nodal = np.concatenate(([initial], coeffs))
    elif kind == "control":
        if coeffs.shape != (mesh.N + 1,):
            raise ValueError(f"control coefficients must have length {mesh.N + 1}")
        nodal = coeffs
    else:
        raise ValueError(f"unknown kind {kind!r}")
    e, s = mesh.locate(t)
    left, right = nodal[e], nodal[e + 1]
    return left * (1 - s) + right * s, (right - left) / mesh.h


@dataclass(frozen=True)
class Transcription:
    ocp: OcpDefinition
    N: int
    q: int = 8

    @property
    def mesh(self) -> Mesh:
        return Mesh(self.N, self.ocp.horizon)

    @property
    def n(self) -> int:
        return 2 * self.N + 1

    @property
    def m(self) -> int:
        return self.N * self.q

    def reference_rule(self) -> QuadratureRule:
        return gauss_legendre(self.q, 0.0, 1.0)

    def split(self, x):
        """``(state, control)`` coefficient views of ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}")
        return x[: self.N], x[self.N :]

    def interpolate(self, y, u):
        """Coefficient vector of the nodal interpolants of callables ``y`` and ``u``."""
        nodes = self.mesh.nodes
        return np.concatenate((y(nodes[1:]), u(nodes)))


class TranscribedProblem(PenaltyProblem):
    """:class:`PenaltyProblem` for a :class:`Transcription` (built by :func:`assemble`)."""

    def __init__(self, trans: Transcription):
        self.trans = trans
        N, q = trans.N, trans.q
        mesh = trans.mesh
        h = mesh.h
        self.n, self.m = trans.n, trans.m

        ref = trans.reference_rule()
        elem = np.repeat(np.arange(N), q)
        s = np.tile(ref.nodes, N)
        self.tau = (elem + s) * h
        self.alpha = np.tile(ref.weights * h, N)
        self.sqrt_alpha = np.sqrt(self.alpha)

        rows = np.arange(self.m)
        inner = elem > 0
        shape = (self.m, self.n)
        self._By = sp.csr_matrix(
            (
                np.concatenate(((1 - s)[inner], s)),
                (np.concatenate((rows[inner], rows)), np.concatenate((elem[inner] - 1, elem))),
            ),
            shape=shape,
        )
        self._Bd = sp.csr_matrix(
            (
                np.concatenate((np.full(inner.sum(), -1 / h), np.full(self.m, 1 / h))),
                (np.concatenate((rows[inner], rows)), np.concatenate((elem[inner] - 1, elem))),
            ),
            shape=shape,
        )
        self._Bu = sp.csr_matrix(
            (np.concatenate((1 - s, s)), (np.concatenate((rows, rows)), np.concatenate((N + elem, N + elem + 1)))),
            shape=shape,
        )
        y0 = trans.ocp.initial_state
        first = elem == 0
        self._y_off = np.where(first, y0 * (1 - s), 0.0)
        self._dy_off = np.where(first, -y0 / h, 0.0)

    def trajectories(self, x):
        """``(y, y', u)`` at the quadrature points."""
        x = np.asarray(x, dtype=float)
        return self._By @ x + self._y_off, self._Bd @ x + self._dy_off, self._Bu @ x

    def _cost(self, x):
        y, _, u = self.trajectories(x)
        return self._full(self.trans.ocp.running_cost(self.tau, y, u))

    def _rhs(self, x):
        y, dy, u = self.trajectories(x)
        return dy, self._full(self.trans.ocp.dynamics_rhs(self.tau, y, u))

    def _full(self, partials):
        # evaluators may return scalars for constant partials
        return Partials(*(np.broadcast_to(np.asarray(v, dtype=float), self.tau.shape) for v in partials))

    def _second(self, w_yy, w_yu, w_uu):
        By, Bu = self._By, self._Bu
        cross = By.T @ sp.diags(w_yu) @ Bu
        return (By.T @ sp.diags(w_yy) @ By + cross + cross.T + Bu.T @ sp.diags(w_uu) @ Bu).tocsr()

    def f(self, x):
        return float(self.alpha @ self._cost(x).value)

    def grad_f(self, x):
        L = self._cost(x)
        return self._By.T @ (self.alpha * L.y) + self._Bu.T @ (self.alpha * L.u)

    def hess_f(self, x):
        L = self._cost(x)
        a = self.alpha
        return self._second(a * L.yy, a * L.yu, a * L.uu)

    def c(self, x):
        dy, g = self._rhs(x)
        return self.sqrt_alpha * (-dy + g.value)

    def jac(self, x):
        _, g = self._rhs(x)
        sa = self.sqrt_alpha
        return (sp.diags(sa * g.y) @ self._By + sp.diags(sa * g.u) @ self._Bu - sp.diags(sa) @ self._Bd).tocsr()

    def hess_c(self, x, w):
        _, g = self._rhs(x)
        ws = np.asarray(w, dtype=float) * self.sqrt_alpha
        return self._second(ws * g.yy, ws * g.yu, ws * g.uu)


def assemble(trans: Transcription) -> TranscribedProblem:
    """Build the penalty problem ``(f, c)`` of a transcription."""
    return TranscribedProblem(trans)


def trajectory_rows(trans: Transcription, x, samples: int):
    """``(t, y, u)`` arrays on ``samples`` uniformly spaced times in ``[0, T]``."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    mesh = trans.mesh
    t = np.linspace(0.0, mesh.T, samples)
    ys, us = trans.split(x)
    y, _ = eval_basis(mesh, ys, t, "state", trans.ocp.initial_state)
    u, _ = eval_basis(mesh, us, t, "control")
    return t, y, u


def trajectory_csv(trans: Transcription, x, samples: int) -> str:
    """CSV text with columns ``t,y,u``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "y", "u"])
    for row in zip(*trajectory_rows(trans, x, samples)):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
