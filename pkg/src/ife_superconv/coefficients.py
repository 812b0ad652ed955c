"""Diffusion coefficients, problem data and manufactured solutions.

The diffusion coefficient beta is piecewise constant over the parent
interval. Manufactured solutions belong to a cosine family: on piece j

    u(x) = cos(x) / beta_j + s_j

with shifts s_j chosen so that u is continuous. The flux beta*u' = -sin(x)
is then continuous by construction.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .config import settings
from .errors import DomainError, InvalidCoefficientError, InvalidInterfaceError

logger = logging.getLogger(__name__)

ScalarFunction = Callable[[ArrayLike], ArrayLike]

SIDES = (None, "left", "right")


def check_side(side: Optional[str]) -> None:
    """Validate a one-sided evaluation flag."""
    if side not in SIDES:
        raise DomainError(f"side must be one of {SIDES}, got {side!r}")


def as_output(values: np.ndarray, x: ArrayLike):
    """Return a float for scalar input, an array otherwise."""
    if np.ndim(x) == 0:
        return float(np.asarray(values).reshape(()))
    return values


@dataclass(frozen=True)
class PiecewiseConstantCoefficient:
    """Piecewise constant diffusion coefficient.

    Pieces are closed-open ``[x_j, x_{j+1})`` except the last, which is
    closed. Lookups with ``side="left"`` / ``side="right"`` return one-sided
    limits at breakpoints.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    parent_interval: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        breakpoints = tuple(float(b) for b in self.breakpoints)
        values = tuple(float(v) for v in self.values)
        lo, hi = (float(t) for t in self.parent_interval)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "parent_interval", (lo, hi))

        if not lo < hi:
            raise DomainError(f"Degenerate parent interval ({lo}, {hi})")
        if len(values) != len(breakpoints) + 1:
            raise InvalidCoefficientError(
                f"Expected {len(breakpoints) + 1} values for "
                f"{len(breakpoints)} breakpoints, got {len(values)}"
            )
        for v in values:
            if not (math.isfinite(v) and v > 0):
                raise InvalidCoefficientError(
                    f"Coefficient values must be positive and finite, got {v}"
                )
        for b in breakpoints:
            if not lo < b < hi:
                raise InvalidInterfaceError(
                    f"Breakpoint {b} not strictly inside ({lo}, {hi})"
                )
        if any(b1 <= b0 for b0, b1 in zip(breakpoints, breakpoints[1:])):
            raise InvalidInterfaceError(
                f"Breakpoints must be strictly increasing: {breakpoints}"
            )

    @classmethod
    def constant(
        cls, value: float, parent_interval: tuple[float, float] = (0.0, 1.0)
    ) -> "PiecewiseConstantCoefficient":
        """Coefficient with a single piece."""
        return cls(breakpoints=(), values=(value,), parent_interval=parent_interval)

    @property
    def piece_count(self) -> int:
        return len(self.values)

    @property
    def tolerance(self) -> float:
        """Absolute snapping tolerance for interface coordinates."""
        lo, hi = self.parent_interval
        return settings.interface_tolerance * (hi - lo)

    @property
    def beta_min(self) -> float:
        return min(self.values)

    @property
    def beta_max(self) -> float:
        return max(self.values)

    @property
    def rho(self) -> float:
        """Coefficient jump ratio max/min (>= 1)."""
        return self.beta_max / self.beta_min

    @property
    def weights(self) -> tuple[float, ...]:
        """Per-piece values of w = 1/beta."""
        return tuple(1.0 / v for v in self.values)

    def snap(self, x: ArrayLike) -> np.ndarray:
        """Move coordinates within tolerance of a breakpoint onto it."""
        x = np.asarray(x, dtype=float)
        for b in self.breakpoints:
            x = np.where(np.abs(x - b) <= self.tolerance, b, x)
        return x

    def piece_index(self, x: ArrayLike, side: Optional[str] = None):
        """Index of the piece that owns ``x``.

        ``side=None`` uses the closed-open convention (right piece at a
        breakpoint), ``"left"`` the piece to the left.
        """
        check_side(side)
        how = "left" if side == "left" else "right"
        idx = np.searchsorted(np.asarray(self.breakpoints), self.snap(x), side=how)
        if np.ndim(x) == 0:
            return int(idx)
        return idx

    def __call__(self, x: ArrayLike, side: Optional[str] = None):
        idx = self.piece_index(x, side)
        return as_output(np.asarray(self.values)[idx], x)

    def weight(self, x: ArrayLike, side: Optional[str] = None):
        """Evaluate w = 1/beta."""
        idx = self.piece_index(x, side)
        return as_output(np.asarray(self.weights)[idx], x)

    def pieces(self) -> list[tuple[float, float]]:
        """Sub-intervals between consecutive breakpoints."""
        lo, hi = self.parent_interval
        edges = (lo, *self.breakpoints, hi)
        return list(zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution built from a flux potential.

    ``potential`` is F with F' equal to the flux; on piece j the solution is
    ``F(x) / beta_j + shifts[j]``. Evaluation at an interface returns the
    left limit unless ``side="right"``.
    """

    beta: PiecewiseConstantCoefficient
    potential: ScalarFunction
    flux_fn: ScalarFunction
    flux_derivative_fn: ScalarFunction
    shifts: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        shifts = [0.0]
        for j, alpha in enumerate(self.beta.breakpoints):
            f_alpha = float(self.potential(alpha))
            shifts.append(
                shifts[-1]
                + f_alpha * (1.0 / self.beta.values[j] - 1.0 / self.beta.values[j + 1])
            )
        object.__setattr__(self, "shifts", tuple(shifts))

    def _piece(self, x: ArrayLike, side: Optional[str]):
        return self.beta.piece_index(x, side or "left")

    def value(self, x: ArrayLike, side: Optional[str] = None):
        """u(x), left limit at interfaces by default."""
        idx = self._piece(x, side)
        xs = np.asarray(x, dtype=float)
        u = np.asarray(self.potential(xs)) / np.asarray(self.beta.values)[idx]
        return as_output(u + np.asarray(self.shifts)[idx], x)

    def __call__(self, x: ArrayLike, side: Optional[str] = None):
        return self.value(x, side)

    def derivative(self, x: ArrayLike, side: Optional[str] = None):
        """u'(x), piecewise."""
        idx = self._piece(x, side)
        xs = np.asarray(x, dtype=float)
        return as_output(
            np.asarray(self.flux_fn(xs)) / np.asarray(self.beta.values)[idx], x
        )

    def flux(self, x: ArrayLike, side: Optional[str] = None):
        """beta*u'(x), continuous across interfaces."""
        check_side(side)
        xs = np.asarray(x, dtype=float)
        return as_output(np.asarray(self.flux_fn(xs), dtype=float) + 0.0 * xs, x)

    def flux_derivative(self, x: ArrayLike):
        """(beta*u')'(x) away from interfaces."""
        xs = np.asarray(x, dtype=float)
        return as_output(
            np.asarray(self.flux_derivative_fn(xs), dtype=float) + 0.0 * xs, x
        )

    def jumps(self) -> list[tuple[float, float]]:
        """(value jump, flux jump) at every interface."""
        result = []
        for alpha in self.beta.breakpoints:
            dv = self.value(alpha, "right") - self.value(alpha, "left")
            df = self.beta(alpha, "right") * self.derivative(alpha, "right") - self.beta(
                alpha, "left"
            ) * self.derivative(alpha, "left")
            result.append((dv, df))
        return result


def _neg_sin(x: ArrayLike) -> np.ndarray:
    return -np.sin(x)


def _neg_cos(x: ArrayLike) -> np.ndarray:
    return -np.cos(x)


def _zero(x: ArrayLike) -> np.ndarray:
    return np.zeros_like(np.asarray(x, dtype=float))


def cosine_solution(beta: PiecewiseConstantCoefficient) -> ManufacturedSolution:
    """Cosine manufactured solution for any number of interfaces."""
    return ManufacturedSolution(
        beta=beta,
        potential=np.cos,
        flux_fn=_neg_sin,
        flux_derivative_fn=_neg_cos,
    )


def zero_solution(beta: PiecewiseConstantCoefficient) -> ManufacturedSolution:
    """The trivial solution u = 0."""
    return ManufacturedSolution(
        beta=beta, potential=_zero, flux_fn=_zero, flux_derivative_fn=_zero
    )


def one_interface_solution(
    beta_minus: float,
    beta_plus: float,
    alpha: float,
    domain: tuple[float, float] = (0.0, 1.0),
) -> ManufacturedSolution:
    """Manufactured solution with a single interface at ``alpha``."""
    if beta_minus <= 0 or beta_plus <= 0:
        raise InvalidCoefficientError(
            f"Coefficients must be positive, got ({beta_minus}, {beta_plus})"
        )
    lo, hi = domain
    if not lo < alpha < hi:
        raise InvalidInterfaceError(f"Interface {alpha} not inside {domain}")
    beta = PiecewiseConstantCoefficient(
        breakpoints=(alpha,), values=(beta_minus, beta_plus), parent_interval=domain
    )
    return cosine_solution(beta)


def two_interface_solution(
    betas: Sequence[float],
    alphas: Sequence[float],
    domain: tuple[float, float] = (0.0, 1.0),
) -> ManufacturedSolution:
    """Manufactured solution with interfaces ``alphas[0] < alphas[1]``."""
    if len(betas) != 3 or len(alphas) != 2:
        raise InvalidInterfaceError(
            f"Expected 3 coefficients and 2 interfaces, got {len(betas)} and {len(alphas)}"
        )
    if any(b <= 0 for b in betas):
        raise InvalidCoefficientError(f"Coefficients must be positive, got {betas}")
    lo, hi = domain
    if not lo < alphas[0] < alphas[1] < hi:
        raise InvalidInterfaceError(
            f"Interfaces must be strictly increasing inside {domain}, got {alphas}"
        )
    beta = PiecewiseConstantCoefficient(
        breakpoints=tuple(alphas), values=tuple(betas), parent_interval=domain
    )
    return cosine_solution(beta)


def rhs_for(solution: ManufacturedSolution, gamma: float, c: float) -> ScalarFunction:
    """Forcing f = -(beta u')' + gamma u' + c u for a manufactured solution."""

    def f(x: ArrayLike, side: Optional[str] = None):
        xs = np.asarray(x, dtype=float)
        values = (
            -np.asarray(solution.flux_derivative(xs))
            + gamma * np.asarray(solution.derivative(xs, side))
            + c * np.asarray(solution.value(xs, side))
        )
        return as_output(values, x)

    return f


@dataclass(frozen=True, kw_only=True)
class ProblemSpec:
    """Elliptic interface problem -(beta u')' + gamma u' + c u = f on (a, b)."""

    beta: PiecewiseConstantCoefficient
    gamma: float = 0.0
    c: float = 0.0
    domain: tuple[float, float] = (0.0, 1.0)
    rhs: ScalarFunction
    exact: Optional[ManufacturedSolution] = None
    boundary_values: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise DomainError(f"Domain must satisfy a < b, got {self.domain}")
        if tuple(self.beta.parent_interval) != (float(a), float(b)):
            raise DomainError(
                f"Coefficient interval {self.beta.parent_interval} "
                f"does not match domain {self.domain}"
            )


def manufactured_problem(
    exact: ManufacturedSolution, gamma: float = 0.0, c: float = 0.0
) -> ProblemSpec:
    """Problem whose solution is ``exact``, with its boundary trace as data."""
    a, b = exact.beta.parent_interval
    logger.debug(
        f"Manufactured problem: beta={exact.beta.values}, "
        f"interfaces={exact.beta.breakpoints}, gamma={gamma}, c={c}"
    )
    return ProblemSpec(
        beta=exact.beta,
        gamma=gamma,
        c=c,
        domain=(a, b),
        rhs=rhs_for(exact, gamma, c),
        exact=exact,
        boundary_values=(exact.value(a), exact.value(b, "right")),
    )
