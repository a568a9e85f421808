"""Benchmark instances: the two-circle problem and a scalar optimal control problem."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problem import PenaltyProblem
from .transcription import OcpDefinition, Partials, Transcription, assemble


class CircleProblem(PenaltyProblem):
    """``f = -x1 - x2`` with residuals ``(x1 +- eps)^2 + x2^2 - 2``.

    For ``eps = 0`` both residuals coincide and the Jacobian has rank one.
    """

    n = 2
    m = 2

    def __init__(self, eps: float = 0.0):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        self.eps = float(eps)

    def __repr__(self):
        return f"CircleProblem(eps={self.eps!r})"

    def f(self, x):
        return -x[0] - x[1]

    def grad_f(self, x):
        return np.array([-1.0, -1.0])

    def hess_f(self, x):
        return np.zeros((2, 2))

    def c(self, x):
        e = self.eps
        return np.array([(x[0] + e) ** 2 + x[1] ** 2 - 2.0, (x[0] - e) ** 2 + x[1] ** 2 - 2.0])

    def jac(self, x):
        e = self.eps
        return np.array([[2 * (x[0] + e), 2 * x[1]], [2 * (x[0] - e), 2 * x[1]]])

    def hess_c(self, x, w):
        return 2.0 * float(np.sum(w)) * np.eye(2)


def circle(eps: float = 0.0) -> CircleProblem:
    return CircleProblem(eps)


@dataclass(frozen=True)
class CircleReference:
    """Reference points and starting guesses of the circle benchmark."""

    x_A: np.ndarray = field(default_factory=lambda: np.array([0.0, np.sqrt(2.0)]))
    x_B: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0]))
    x0: np.ndarray = field(
        default_factory=lambda: np.sqrt(2.0) * np.array([np.cos(3 * np.pi / 8), np.sin(3 * np.pi / 8)])
    )
    lambda0: np.ndarray = field(default_factory=lambda: 0.4619 * np.ones(2))


CIRCLE_REF = CircleReference()


def metrics_circle(x):
    """Euclidean distances ``(e_A, e_B)`` of ``x`` to the two reference points."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - CIRCLE_REF.x_A)), float(np.linalg.norm(x - CIRCLE_REF.x_B))


# Benchmark OCP: min int_0^{pi/2} y^2 + cos(t) u  s.t.  y' = y^2 / 2 + u, y(0) = 0
OCP_HORIZON = np.pi / 2
OCP_OPTIMAL_COST = -0.2569969625


def _running_cost(t, y, u):
    zero = np.zeros_like(y)
    return Partials(y * y + np.cos(t) * u, 2 * y, np.cos(t), 2.0 + zero, zero, zero)


def _dynamics(t, y, u):
    zero = np.zeros_like(y)
    return Partials(0.5 * y * y + u, y, 1.0 + zero, 1.0 + zero, zero, zero)


OCP = OcpDefinition(OCP_HORIZON, 0.0, _running_cost, _dynamics)


def ocp_state(t):
    """Analytic optimal state ``sin t / (cos t - 2)``."""
    return np.sin(t) / (np.cos(t) - 2.0)


def ocp_control(t):
    """Analytic optimal control ``y' - y^2 / 2`` along the optimal state."""
    y = ocp_state(t)
    dy = (1.0 - 2.0 * np.cos(t)) / (np.cos(t) - 2.0) ** 2
    return dy - 0.5 * y * y


def ocp_transcription(N: int, q: int = 8) -> Transcription:
    return Transcription(OCP, N, q)


def ocp(N: int, q: int = 8):
    """Assembled penalty problem of the OCP benchmark on ``N`` elements."""
    return assemble(ocp_transcription(N, q))


def metrics_ocp(problem, x):
    """``(delta_J, r)``: optimality gap ``f(x) - J*`` and residual norm ``||c(x)||_2``.

    ``problem`` may be an assembled problem or a :class:`Transcription`.
    """
    if isinstance(problem, Transcription):
        problem = assemble(problem)
    x = np.asarray(x, dtype=float)
    return problem.f(x) - OCP_OPTIMAL_COST, float(np.linalg.norm(problem.c(x)))
