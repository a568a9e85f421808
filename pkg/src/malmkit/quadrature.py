"""Gauss-Legendre quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on the interval ``[a, b]``."""

    nodes: np.ndarray
    weights: np.ndarray
    a: float = -1.0
    b: float = 1.0

    @property
    def q(self) -> int:
        return self.nodes.size

    def mapped(self, a: float, b: float) -> "QuadratureRule":
        """The same rule affinely mapped onto ``[a, b]``."""
        scale = (b - a) / (self.b - self.a)
        nodes = 0.5 * (a + b) + (self.nodes - 0.5 * (self.a + self.b)) * scale
        return QuadratureRule(nodes, self.weights * scale, a, b)

    def integrate(self, fun) -> float:
        return float(self.weights @ fun(self.nodes))


def _legendre(q, t):
    """P_q(t) and P_q'(t) by the three-term recurrence."""
    p_prev, p = np.ones_like(t), t.copy()
    for k in range(2, q + 1):
        p_prev, p = p, ((2 * k - 1) * t * p - (k - 1) * p_prev) / k
    dp = q * (t * p - p_prev) / (t * t - 1.0)
    return p, dp


def gauss_legendre(q: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """Return the ``q``-point Gauss-Legendre rule on ``[a, b]``.

    Nodes are the roots of ``P_q``, found by Newton's method from the
    Chebyshev-like guesses ``cos(pi (i - 1/4) / (q + 1/2))``; weights are
    ``2 / ((1 - t^2) P_q'(t)^2)``.  The rule is exact for polynomials of
    degree ``2q - 1``.
    """
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= MAX_POINTS:
        raise ValueError(f"q must be an integer in [1, {MAX_POINTS}], got {q!r}")
    if q == 1:
        return QuadratureRule(np.zeros(1), np.full(1, 2.0)).mapped(a, b)

    i = np.arange(1, q + 1)
    t = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(100):
        p, dp = _legendre(q, t)
        step = p / dp
        t = t - step
        if np.max(np.abs(step)) <= 1e-15:
            break
    _, dp = _legendre(q, t)
    weights = 2.0 / ((1.0 - t * t) * dp * dp)

    # ascending order, symmetric pairs averaged to remove round-off asymmetry
    t, weights = t[::-1], weights[::-1]
    t = 0.5 * (t - t[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(t, weights).mapped(a, b)
