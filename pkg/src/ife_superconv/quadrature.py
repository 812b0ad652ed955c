"""Gauss-Legendre rules and interface-split composite integration."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidBreakpointError, UnsupportedOrderError

logger = logging.getLogger(__name__)

MAX_RULE_POINTS = 32
NEWTON_TOLERANCE = 1e-15
NEWTON_MAX_ITERATIONS = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval [-1, 1]."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def size(self) -> int:
        return len(self.nodes)

    def mapped(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for the physical interval [lo, hi]."""
        half = 0.5 * (hi - lo)
        nodes = 0.5 * (lo + hi) + half * np.asarray(self.nodes)
        return nodes, half * np.asarray(self.weights)


def _legendre_with_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def gauss_legendre_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule, nodes found by Newton iteration on P_n."""
    if not 1 <= n <= MAX_RULE_POINTS:
        raise UnsupportedOrderError(
            f"Gauss rule size must be in [1, {MAX_RULE_POINTS}], got {n}"
        )

    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, dp = _legendre_with_derivative(n, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < NEWTON_TOLERANCE:
            break

    _, dp = _legendre_with_derivative(n, x)
    weights = 2.0 / ((1.0 - x * x) * dp * dp)

    # Ascending order, exactly symmetric.
    x = x[::-1]
    weights = weights[::-1]
    x = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])

    logger.debug(f"Built {n}-point Gauss-Legendre rule")
    return QuadratureRule(nodes=tuple(x.tolist()), weights=tuple(weights.tolist()))


def split_nodes(
    interval: tuple[float, float], breakpoints: Sequence[float], n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Composite n-point nodes and weights over the pieces of ``interval``."""
    lo, hi = interval
    for b in breakpoints:
        if not lo <= b <= hi:
            raise InvalidBreakpointError(f"Breakpoint {b} outside [{lo}, {hi}]")

    rule = gauss_legendre_rule(n)
    edges = [lo, *sorted(breakpoints), hi]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        x, w = rule.mapped(a, b)
        nodes.append(x)
        weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_split(
    f: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    breakpoints: Sequence[float],
    n: int,
) -> float:
    """Integrate ``f`` with an n-point rule on every piece between breakpoints.

    Exact when ``f`` is a polynomial of degree <= 2n-1 on each piece. Nodes
    are interior to pieces, so ``f`` is never evaluated at a breakpoint.
    """
    x, w = split_nodes(interval, breakpoints, n)
    if x.size == 0:
        return 0.0
    values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    return float(np.dot(w, values))
