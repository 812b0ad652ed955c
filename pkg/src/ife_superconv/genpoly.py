"""Standard and generalized Legendre/Lobatto families on [-1, 1].

The generalized Legendre polynomials L_n are the monic polynomials
orthogonal under the weight w = 1/beta_hat, built by the three-term
recurrence

    L_{n+1} = (xi - a_n) L_n - b_n L_{n-1}.

The generalized Lobatto polynomials phi_n are piecewise polynomials:
phi_0, phi_1 are the nodal IFE hat functions and, for n >= 2, phi_n is the
antiderivative of w * L_{n-1} from -1. Hence beta_hat * phi_n' = L_{n-1},
which carries the value and flux jump conditions at every breakpoint.

All polynomial algebra is done on monomial coefficients with
``numpy.polynomial.polynomial``; inner products use Gauss rules that are
exact for the integrand degrees.
"""

import csv
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import numpy.polynomial.legendre as npleg
import numpy.polynomial.polynomial as npoly
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from .coefficients import PiecewiseConstantCoefficient, as_output, check_side
from .config import settings
from .errors import (
    DomainError,
    RecurrenceBreakdownError,
    RootCountViolationError,
    UnsupportedOrderError,
)
from .quadrature import integrate_split

logger = logging.getLogger(__name__)

REFERENCE = (-1.0, 1.0)
DOMAIN_SLACK = 1e-12
ROUNDOFF_FACTOR = 16.0


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Piecewise polynomial in monomial coefficients (lowest degree first).

    Evaluation at a breakpoint returns the left limit unless
    ``side="right"``.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, ...], ...]
    domain: tuple[float, float] = REFERENCE

    def __post_init__(self):
        object.__setattr__(
            self, "breakpoints", tuple(float(b) for b in self.breakpoints)
        )
        object.__setattr__(
            self,
            "pieces",
            tuple(tuple(float(c) for c in np.atleast_1d(p)) for p in self.pieces),
        )
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise DomainError(
                f"{len(self.breakpoints)} breakpoints need "
                f"{len(self.breakpoints) + 1} pieces, got {len(self.pieces)}"
            )

    @classmethod
    def polynomial(
        cls, coefficients: ArrayLike, domain: tuple[float, float] = REFERENCE
    ) -> "PiecewisePolynomial":
        """Single-piece polynomial."""
        return cls(breakpoints=(), pieces=(tuple(np.atleast_1d(coefficients)),), domain=domain)

    @property
    def degree(self) -> int:
        degrees = []
        for coeffs in self.pieces:
            trimmed = np.trim_zeros(np.asarray(coeffs), "b")
            degrees.append(max(len(trimmed) - 1, 0))
        return max(degrees)

    @property
    def is_polynomial(self) -> bool:
        return not self.breakpoints

    def edges(self) -> tuple[float, ...]:
        return (self.domain[0], *self.breakpoints, self.domain[1])

    def piece_index(self, xi: ArrayLike, side: Optional[str] = None):
        check_side(side)
        how = "right" if side == "right" else "left"
        idx = np.searchsorted(np.asarray(self.breakpoints), np.asarray(xi, dtype=float), side=how)
        if np.ndim(xi) == 0:
            return int(idx)
        return idx

    def _checked(self, xi: ArrayLike) -> np.ndarray:
        x = np.asarray(xi, dtype=float)
        lo, hi = self.domain
        slack = DOMAIN_SLACK * (hi - lo)
        if np.any(x < lo - slack) or np.any(x > hi + slack):
            raise DomainError(f"Evaluation point outside [{lo}, {hi}]")
        return np.clip(x, lo, hi)

    def eval(self, xi: ArrayLike, side: Optional[str] = None):
        """Evaluate with one-sided limits at breakpoints (left by default)."""
        x = self._checked(xi)
        if self.is_polynomial:
            check_side(side)
            return as_output(npoly.polyval(x, self.pieces[0]), xi)
        idx = np.atleast_1d(self.piece_index(x, side))
        flat = np.atleast_1d(x)
        out = np.empty_like(flat)
        for j, coeffs in enumerate(self.pieces):
            mask = idx == j
            if np.any(mask):
                out[mask] = npoly.polyval(flat[mask], coeffs)
        return as_output(out.reshape(x.shape), xi)

    def __call__(self, xi: ArrayLike, side: Optional[str] = None):
        return self.eval(xi, side)

    def derivative(self, order: int = 1) -> "PiecewisePolynomial":
        return _derivative(self, order)

    def eval_derivative(self, xi: ArrayLike, side: Optional[str] = None, order: int = 1):
        return self.derivative(order).eval(xi, side)

    def scaled(self, factor: float) -> "PiecewisePolynomial":
        return self.weighted([factor] * len(self.pieces))

    def weighted(self, factors: Sequence[float]) -> "PiecewisePolynomial":
        """Multiply piece j by ``factors[j]``."""
        return PiecewisePolynomial(
            self.breakpoints,
            tuple(tuple(np.asarray(c) * f) for c, f in zip(self.pieces, factors)),
            self.domain,
        )

    def antiderivative(self) -> "PiecewisePolynomial":
        """Continuous antiderivative vanishing at the left end of the domain."""
        edges = self.edges()
        pieces = []
        start = 0.0
        for j, coeffs in enumerate(self.pieces):
            integral = npoly.polyint(coeffs, lbnd=edges[j], k=start)
            pieces.append(tuple(integral))
            start = float(npoly.polyval(edges[j + 1], integral))
        return PiecewisePolynomial(self.breakpoints, tuple(pieces), self.domain)


@lru_cache(maxsize=4096)
def _derivative(poly: PiecewisePolynomial, order: int) -> PiecewisePolynomial:
    return PiecewisePolynomial(
        poly.breakpoints,
        tuple(tuple(npoly.polyder(c, m=order)) if len(c) > order else (0.0,) for c in poly.pieces),
        poly.domain,
    )


def _one_minus(poly: PiecewisePolynomial) -> PiecewisePolynomial:
    return PiecewisePolynomial(
        poly.breakpoints,
        tuple(tuple(npoly.polysub([1.0], c)) for c in poly.pieces),
        poly.domain,
    )


@dataclass(frozen=True, eq=False)
class OrthogonalFamily:
    """Legendre-type and Lobatto-type families on the reference element.

    ``weight`` is beta_hat on [-1, 1]; ``legendre`` holds degrees 0..p and
    ``lobatto`` holds phi_0..phi_{p+1}.
    """

    weight: PiecewiseConstantCoefficient
    max_degree: int
    legendre: tuple[PiecewisePolynomial, ...]
    lobatto: tuple[PiecewisePolynomial, ...]
    legendre_norms: tuple[float, ...]
    lobatto_norms: tuple[float, ...]

    kind = "abstract"

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.weight.breakpoints


@dataclass(frozen=True, eq=False)
class StandardBasis(OrthogonalFamily):
    """Legendre P_n and Lobatto psi_n (unit weight)."""

    kind = "standard"


@dataclass(frozen=True, eq=False)
class GeneralizedBasis(OrthogonalFamily):
    """Generalized Legendre L_n (monic) and Lobatto phi_n for a weight 1/beta_hat."""

    recurrence_a: tuple[float, ...]
    recurrence_b: tuple[float, ...]

    kind = "generalized"


Basis = Union[StandardBasis, GeneralizedBasis]


def _check_degree(p: int) -> None:
    if not 0 <= p <= settings.max_degree:
        raise UnsupportedOrderError(
            f"Polynomial degree must be in [0, {settings.max_degree}], got {p}"
        )


def _check_reference(weight: PiecewiseConstantCoefficient) -> None:
    if weight.parent_interval != REFERENCE:
        raise DomainError(
            f"Weight must live on {REFERENCE}, got {weight.parent_interval}"
        )


def weighted_inner(
    weight: PiecewiseConstantCoefficient,
    f: np.ndarray,
    g: np.ndarray,
    points: int,
) -> float:
    """(f, g)_w = integral of w f g over [-1, 1] for monomial coefficient arrays."""
    product = npoly.polymul(f, g)
    return integrate_split(
        lambda x: weight.weight(x) * npoly.polyval(x, product),
        REFERENCE,
        weight.breakpoints,
        points,
    )


def build_recurrence(
    weight: PiecewiseConstantCoefficient, p: int
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[PiecewisePolynomial, ...], tuple[float, ...]]:
    """Monic generalized Legendre polynomials L_0..L_p by the Stieltjes recurrence.

    Returns (a_0..a_p, b_1..b_p, L_0..L_p, c_0..c_p) with c_n = (L_n, L_n)_w.
    """
    _check_degree(p)
    _check_reference(weight)
    points = settings.assembly_points(p)

    polys = [np.array([1.0])]
    a_coeffs: list[float] = []
    b_coeffs: list[float] = []
    norms: list[float] = []
    for n in range(p + 1):
        current = polys[n]
        c_n = weighted_inner(weight, current, current, points)
        if not (np.isfinite(c_n) and c_n > 0):
            raise RecurrenceBreakdownError(f"Nonpositive norm c_{n} = {c_n}")
        norms.append(c_n)
        a_coeffs.append(weighted_inner(weight, npoly.polymulx(current), current, points) / c_n)
        if n >= 1:
            b_n = c_n / norms[n - 1]
            if not b_n > 0:
                raise RecurrenceBreakdownError(f"Nonpositive recurrence coefficient b_{n} = {b_n}")
            b_coeffs.append(b_n)
        if n < p:
            nxt = npoly.polysub(npoly.polymulx(current), a_coeffs[n] * current)
            if n >= 1:
                nxt = npoly.polysub(nxt, b_coeffs[n - 1] * polys[n - 1])
            polys.append(nxt)

    logger.debug(f"Recurrence for weight {weight.values}: a={a_coeffs}, b={b_coeffs}")
    legendre = tuple(PiecewisePolynomial.polynomial(c) for c in polys)
    return tuple(a_coeffs), tuple(b_coeffs), legendre, tuple(norms)


def build_lobatto(
    weight: PiecewiseConstantCoefficient, legendre: Sequence[PiecewisePolynomial]
) -> tuple[PiecewisePolynomial, ...]:
    """Generalized Lobatto family phi_0..phi_{p+1} from L_0..L_p."""
    _check_reference(weight)
    w = weight.weights
    step = PiecewisePolynomial(weight.breakpoints, tuple((wj,) for wj in w))
    cumulative = step.antiderivative()
    total = cumulative(1.0)
    phi1 = cumulative.scaled(1.0 / total)
    family = [_one_minus(phi1), phi1]
    for poly in legendre[1:]:
        coeffs = poly.pieces[0]
        integrand = PiecewisePolynomial(
            weight.breakpoints, tuple(tuple(np.asarray(coeffs) * wj) for wj in w)
        )
        family.append(integrand.antiderivative())
    return tuple(family)


def _stiffness_norms(
    weight: PiecewiseConstantCoefficient, lobatto: Sequence[PiecewisePolynomial], points: int
) -> tuple[float, ...]:
    norms = []
    for phi in lobatto:
        dphi = phi.derivative()
        norms.append(
            integrate_split(
                lambda x, d=dphi: weight(x) * d(x) ** 2, REFERENCE, weight.breakpoints, points
            )
        )
    return tuple(norms)


@lru_cache(maxsize=256)
def build_generalized_basis(weight: PiecewiseConstantCoefficient, p: int) -> GeneralizedBasis:
    """Generalized basis for beta_hat = ``weight`` on [-1, 1], degree p."""
    a, b, legendre, norms = build_recurrence(weight, p)
    lobatto = build_lobatto(weight, legendre)
    lobatto_norms = _stiffness_norms(weight, lobatto, settings.assembly_points(p))
    return GeneralizedBasis(
        weight=weight,
        max_degree=p,
        legendre=legendre,
        lobatto=lobatto,
        legendre_norms=norms,
        lobatto_norms=lobatto_norms,
        recurrence_a=a,
        recurrence_b=b,
    )


@lru_cache(maxsize=None)
def build_standard_basis(p: int) -> StandardBasis:
    """Legendre P_0..P_p and Lobatto psi_0..psi_{p+1}."""
    _check_degree(p)
    legendre = []
    for n in range(p + 1):
        unit = np.zeros(n + 1)
        unit[n] = 1.0
        legendre.append(PiecewisePolynomial.polynomial(npleg.leg2poly(unit)))
    lobatto = [
        PiecewisePolynomial.polynomial([0.5, -0.5]),
        PiecewisePolynomial.polynomial([0.5, 0.5]),
    ]
    for poly in legendre[1:]:
        lobatto.append(
            PiecewisePolynomial.polynomial(npoly.polyint(poly.pieces[0], lbnd=-1.0))
        )
    lobatto_norms = [0.5, 0.5] + [2.0 / (2 * n - 1) for n in range(2, p + 2)]
    return StandardBasis(
        weight=PiecewiseConstantCoefficient.constant(1.0, REFERENCE),
        max_degree=p,
        legendre=tuple(legendre),
        lobatto=tuple(lobatto),
        legendre_norms=tuple(2.0 / (2 * n + 1) for n in range(p + 1)),
        lobatto_norms=tuple(lobatto_norms),
    )


def eval(poly: PiecewisePolynomial, xi: ArrayLike, side: Optional[str] = None):
    """Evaluate ``poly`` at ``xi`` (left limit at breakpoints by default)."""
    return poly.eval(xi, side)


def eval_derivative(
    poly: PiecewisePolynomial, xi: ArrayLike, side: Optional[str] = None, order: int = 1
):
    return poly.eval_derivative(xi, side, order)


def flux_eval(basis: Basis, n: int, xi: ArrayLike, side: Optional[str] = None):
    """beta_hat * phi_n' on the reference element.

    For n >= 2 this is L_{n-1} exactly, hence continuous at every breakpoint.
    """
    if not 0 <= n <= basis.max_degree + 1:
        raise DomainError(f"Mode {n} outside 0..{basis.max_degree + 1}")
    if n >= 2:
        return basis.legendre[n - 1].eval(xi, side)
    lookup = side or "left"
    beta_hat = np.asarray(basis.weight(np.asarray(xi, dtype=float), lookup))
    return as_output(beta_hat * np.asarray(basis.lobatto[n].eval_derivative(xi, lookup)), xi)


def value_jump(poly: PiecewisePolynomial, breakpoint: float) -> float:
    """poly(b+) - poly(b-)."""
    return poly.eval(breakpoint, "right") - poly.eval(breakpoint, "left")


def flux_jump(basis: Basis, n: int, breakpoint: float, order: int = 1) -> float:
    """Jump of beta_hat * phi_n^(order) across ``breakpoint``."""
    phi = basis.lobatto[n]
    right = basis.weight(breakpoint, "right") * phi.eval_derivative(breakpoint, "right", order)
    left = basis.weight(breakpoint, "left") * phi.eval_derivative(breakpoint, "left", order)
    return right - left


def _roundoff(coeffs: Sequence[float], xi: float) -> float:
    """Bound on the evaluation error of a monomial piece at xi."""
    terms = np.abs(np.asarray(coeffs, dtype=float)) * abs(xi) ** np.arange(len(coeffs))
    return ROUNDOFF_FACTOR * len(coeffs) * np.finfo(float).eps * float(np.sum(terms))


def interior_roots(
    poly: PiecewisePolynomial, expected: Optional[int] = None
) -> list[float]:
    """Sign-changing roots of ``poly`` in the open domain.

    Each piece is scanned at ``root_scan_density * (degree + 1)`` uniform
    samples; brackets are refined with Brent's method. Endpoint values at
    the round-off level of their piece are treated as zeros, and roots within
    ``root_endpoint_gap`` of an endpoint are endpoint zeros, not interior
    roots.
    """
    lo, hi = poly.domain
    density = settings.root_scan_density * (poly.degree + 1)
    edges = poly.edges()
    grid = np.unique(
        np.concatenate([np.linspace(a, b, density + 1) for a, b in zip(edges[:-1], edges[1:])])
    )
    values = np.asarray(poly.eval(grid), dtype=float)
    keep = np.ones(grid.size, dtype=bool)
    for end, piece in ((0, poly.pieces[0]), (grid.size - 1, poly.pieces[-1])):
        if abs(values[end]) <= _roundoff(piece, grid[end]):
            keep[end] = False
    grid, values = grid[keep], values[keep]

    gap = settings.root_endpoint_gap * (hi - lo)
    roots: list[float] = []
    for i in range(grid.size):
        if values[i] == 0.0 and lo < grid[i] < hi:
            roots.append(float(grid[i]))
        if i + 1 < grid.size and values[i] * values[i + 1] < 0:
            roots.append(
                float(brentq(poly.eval, grid[i], grid[i + 1], xtol=settings.root_tolerance))
            )
    roots = sorted(r for r in roots if lo + gap < r < hi - gap)

    if expected is not None and len(roots) != expected:
        raise RootCountViolationError(
            f"Expected {expected} interior roots, found {len(roots)}: {roots}"
        )
    return roots


def legendre_roots(basis: Basis, n: int) -> list[float]:
    """The n simple roots of the degree-n (generalized) Legendre polynomial."""
    return interior_roots(basis.legendre[n], expected=n)


def lobatto_roots(basis: Basis, n: int) -> list[float]:
    """The n-2 interior sign changes of the (generalized) Lobatto phi_n, n >= 2."""
    if n < 2:
        raise DomainError(f"Lobatto roots need n >= 2, got {n}")
    return interior_roots(basis.lobatto[n], expected=n - 2)


def moment_residual(basis: Basis, n: int, j: int) -> float:
    """j-th iterated antiderivative of phi_n from -1, evaluated at +1.

    Vanishes for 0 <= j <= n-2.
    """
    if not 2 <= n <= basis.max_degree + 1:
        raise DomainError(f"Mode {n} outside 2..{basis.max_degree + 1}")
    if not 0 <= j <= n - 2:
        raise DomainError(f"Antiderivative order {j} outside 0..{n - 2}")
    poly = basis.lobatto[n]
    for _ in range(j):
        poly = poly.antiderivative()
    return poly.eval(1.0)


def basis_samples(basis: Basis, count: int = 201) -> list[list[float]]:
    """Rows (xi, phi_0..phi_{p+1}, L_0..L_p) on a uniform grid plus breakpoints."""
    grid = np.unique(np.concatenate([np.linspace(-1.0, 1.0, count), basis.breakpoints]))
    columns = [grid]
    columns += [np.asarray(phi(grid)) for phi in basis.lobatto]
    columns += [np.asarray(poly(grid)) for poly in basis.legendre]
    return np.column_stack(columns).tolist()


def dump_basis_samples(basis: Basis, path: Path, count: int = 201) -> Path:
    """Write ``basis_samples`` as CSV."""
    p = basis.max_degree
    header = ["xi"] + [f"phi_{n}" for n in range(p + 2)] + [f"L_{n}" for n in range(p + 1)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in basis_samples(basis, count):
            writer.writerow([f"{v:.16e}" for v in row])
    logger.info(f"Basis samples written to {path}")
    return path
