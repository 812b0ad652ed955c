"""Meshes, reference maps, element bases and the degree-of-freedom layout.

Elements are numbered 1..N, element i spanning (x_{i-1}, x_i). Noninterface
elements use the standard Lobatto family; an element containing one or
more interfaces uses a generalized family built for its mapped coefficient.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
from numpy.typing import ArrayLike

from .coefficients import PiecewiseConstantCoefficient, as_output
from .config import settings
from .errors import DomainError, InvalidInterfaceError, InvalidMeshError, UnsupportedOrderError
from .genpoly import (
    REFERENCE,
    Basis,
    build_generalized_basis,
    build_standard_basis,
    flux_eval,
)
from .quadrature import split_nodes

logger = logging.getLogger(__name__)

REFERENCE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Partition a = x_0 < ... < x_N = b with interface classification.

    ``interface_elements`` maps an element index to the interfaces strictly
    inside it. Interfaces within tolerance of a mesh point are fitted and
    belong to no element.
    """

    points: tuple[float, ...]
    interfaces: tuple[float, ...] = ()
    interface_elements: Mapping[int, tuple[float, ...]] = field(init=False)
    fitted_interfaces: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        points = tuple(float(x) for x in self.points)
        interfaces = tuple(sorted(float(a) for a in self.interfaces))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "interfaces", interfaces)

        if len(points) < 3:
            raise InvalidMeshError(f"Need at least 2 elements, got {len(points) - 1}")
        if any(x1 <= x0 for x0, x1 in zip(points, points[1:])):
            raise InvalidMeshError("Mesh points must be strictly increasing")

        a, b = points[0], points[-1]
        tol = settings.interface_tolerance * (b - a)
        grid = np.asarray(points)
        elements: dict[int, list[float]] = {}
        fitted = []
        for alpha in interfaces:
            if not a < alpha < b:
                raise InvalidInterfaceError(f"Interface {alpha} outside ({a}, {b})")
            if np.min(np.abs(grid - alpha)) <= tol:
                fitted.append(alpha)
                continue
            element = int(np.searchsorted(grid, alpha))
            elements.setdefault(element, []).append(alpha)

        object.__setattr__(
            self,
            "interface_elements",
            MappingProxyType({k: tuple(v) for k, v in sorted(elements.items())}),
        )
        object.__setattr__(self, "fitted_interfaces", tuple(fitted))

    @property
    def element_count(self) -> int:
        return len(self.points) - 1

    @property
    def elements(self) -> range:
        return range(1, self.element_count + 1)

    @property
    def domain(self) -> tuple[float, float]:
        return self.points[0], self.points[-1]

    @property
    def sizes(self) -> tuple[float, ...]:
        return tuple(x1 - x0 for x0, x1 in zip(self.points, self.points[1:]))

    @property
    def h(self) -> float:
        return max(self.sizes)

    @property
    def tolerance(self) -> float:
        a, b = self.domain
        return settings.interface_tolerance * (b - a)

    def bounds(self, element: int) -> tuple[float, float]:
        if not 1 <= element <= self.element_count:
            raise DomainError(f"Element {element} outside 1..{self.element_count}")
        return self.points[element - 1], self.points[element]

    def is_interface(self, element: int) -> bool:
        return element in self.interface_elements

    def locate(self, x: ArrayLike, side: Optional[str] = None):
        """Element owning ``x``: the one to the left of a node unless ``side="right"``."""
        a, b = self.domain
        xs = np.asarray(x, dtype=float)
        if np.any(xs < a - self.tolerance) or np.any(xs > b + self.tolerance):
            raise DomainError(f"Point outside the domain [{a}, {b}]")
        how = "right" if side == "right" else "left"
        idx = np.searchsorted(np.asarray(self.points), xs, side=how)
        idx = np.clip(idx, 1, self.element_count)
        if np.ndim(x) == 0:
            return int(idx)
        return idx


def build_uniform_mesh(
    domain: tuple[float, float], n: int, interfaces: tuple[float, ...] = ()
) -> Mesh:
    """N equal elements over ``domain``."""
    if n < 2:
        raise InvalidMeshError(f"Uniform mesh needs N >= 2, got {n}")
    a, b = domain
    return Mesh(points=tuple(np.linspace(a, b, n + 1)), interfaces=tuple(interfaces))


def _to_reference(lo: float, hi: float, x: ArrayLike, tol: float):
    xs = np.asarray(x, dtype=float)
    if np.any(xs < lo - tol) or np.any(xs > hi + tol):
        raise DomainError(f"Point outside element [{lo}, {hi}]")
    xi = np.clip((2.0 * xs - lo - hi) / (hi - lo), -1.0, 1.0)
    return as_output(xi, x)


def _from_reference(lo: float, hi: float, xi: ArrayLike):
    xis = np.asarray(xi, dtype=float)
    if np.any(np.abs(xis) > 1.0 + REFERENCE_SLACK):
        raise DomainError("Reference coordinate outside [-1, 1]")
    return as_output(0.5 * (lo + hi) + 0.5 * (hi - lo) * xis, xi)


def to_reference(mesh: Mesh, element: int, x: ArrayLike):
    """Affine map of element ``element`` onto [-1, 1]."""
    lo, hi = mesh.bounds(element)
    return _to_reference(lo, hi, x, mesh.tolerance)


def from_reference(mesh: Mesh, element: int, xi: ArrayLike):
    lo, hi = mesh.bounds(element)
    return _from_reference(lo, hi, xi)


@dataclass(frozen=True)
class ReferenceTables:
    """Shape-function tables at composite Gauss nodes of the reference element.

    Rows are local modes 0..p. ``fluxes`` holds weight * phi_n' where the
    weight is the family's own (unit for the standard family).
    """

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    fluxes: np.ndarray


@lru_cache(maxsize=1024)
def reference_tables(basis: Basis, p: int, points: int) -> ReferenceTables:
    nodes, weights = split_nodes(REFERENCE, basis.breakpoints, points)
    tables = ReferenceTables(
        nodes=nodes,
        weights=weights,
        values=np.array([basis.lobatto[n](nodes) for n in range(p + 1)]),
        derivatives=np.array([basis.lobatto[n].eval_derivative(nodes) for n in range(p + 1)]),
        fluxes=np.array([flux_eval(basis, n, nodes) for n in range(p + 1)]),
    )
    for array in (tables.nodes, tables.weights, tables.values, tables.derivatives, tables.fluxes):
        array.setflags(write=False)
    return tables


@dataclass(frozen=True, eq=False)
class ElementBasis:
    """Local shape functions of one element.

    ``coefficient`` is beta pulled back to [-1, 1]; ``basis`` is either the
    standard family (with unit weight) or the generalized family whose
    weight is ``coefficient`` itself.
    """

    element: int
    bounds: tuple[float, float]
    degree: int
    kind: str
    basis: Basis
    coefficient: PiecewiseConstantCoefficient
    interfaces: tuple[float, ...] = ()

    @property
    def h(self) -> float:
        return self.bounds[1] - self.bounds[0]

    @property
    def flux_scale(self) -> float:
        """Factor turning the family's weighted derivative into beta_hat * phi'."""
        if self.kind == "standard":
            return self.coefficient.values[0]
        return 1.0

    def to_reference(self, x: ArrayLike):
        lo, hi = self.bounds
        return _to_reference(lo, hi, x, REFERENCE_SLACK * (hi - lo))

    def from_reference(self, xi: ArrayLike):
        return _from_reference(*self.bounds, xi)

    def tables(self, points: int) -> ReferenceTables:
        return reference_tables(self.basis, self.degree, points)

    def shape_values(self, xi: ArrayLike, side: Optional[str] = None) -> np.ndarray:
        """phi_n(xi) for n = 0..p, one row per mode."""
        return np.array([self.basis.lobatto[n](xi, side) for n in range(self.degree + 1)])

    def shape_fluxes(self, xi: ArrayLike, side: Optional[str] = None) -> np.ndarray:
        """beta_hat * phi_n'(xi) in reference units, one row per mode."""
        return self.flux_scale * np.array(
            [flux_eval(self.basis, n, xi, side) for n in range(self.degree + 1)]
        )

    def evaluate(self, coefficients: np.ndarray, x: ArrayLike, side: Optional[str] = None):
        """Local expansion sum_n c_n phi_n at physical ``x``."""
        xi = self.to_reference(x)
        return as_output(np.asarray(coefficients) @ self.shape_values(xi, side), x)

    def evaluate_flux(self, coefficients: np.ndarray, x: ArrayLike, side: Optional[str] = None):
        """beta * d/dx of the local expansion at physical ``x``."""
        xi = self.to_reference(x)
        return as_output(
            (2.0 / self.h) * (np.asarray(coefficients) @ self.shape_fluxes(xi, side)), x
        )


def _reference_coefficient(
    beta: PiecewiseConstantCoefficient, lo: float, hi: float, interfaces: tuple[float, ...]
) -> PiecewiseConstantCoefficient:
    edges = (lo, *interfaces, hi)
    values = tuple(beta(0.5 * (x0 + x1)) for x0, x1 in zip(edges[:-1], edges[1:]))
    breakpoints = tuple((2.0 * a - lo - hi) / (hi - lo) for a in interfaces)
    return PiecewiseConstantCoefficient(breakpoints, values, REFERENCE)


def element_basis(
    mesh: Mesh, element: int, p: int, beta: PiecewiseConstantCoefficient
) -> ElementBasis:
    """Standard basis on noninterface elements, generalized on interface elements.

    Generalized bases are cached by their mapped coefficient, so elements with
    identical reference weights share one basis.
    """
    lo, hi = mesh.bounds(element)
    interfaces = mesh.interface_elements.get(element, ())
    coefficient = _reference_coefficient(beta, lo, hi, interfaces)
    if not interfaces:
        return ElementBasis(
            element=element,
            bounds=(lo, hi),
            degree=p,
            kind="standard",
            basis=build_standard_basis(p),
            coefficient=coefficient,
        )
    logger.debug(
        f"Element {element} ({lo}, {hi}) holds interfaces {interfaces}; "
        f"reference weight breakpoints {coefficient.breakpoints}"
    )
    return ElementBasis(
        element=element,
        bounds=(lo, hi),
        degree=p,
        kind="generalized",
        basis=build_generalized_basis(coefficient, p),
        coefficient=coefficient,
        interfaces=interfaces,
    )


def element_bases(
    mesh: Mesh, p: int, beta: PiecewiseConstantCoefficient
) -> dict[int, ElementBasis]:
    return {e: element_basis(mesh, e, p, beta) for e in mesh.elements}


@dataclass(frozen=True)
class DofMap:
    """Global numbering for S_p(T_h).

    Vertices and interior modes are interleaved element by element: vertex
    x_k gets index k*p and the interior modes of element i follow the
    vertex x_{i-1}. Local mode order is [phi_0, phi_1, phi_2, ..., phi_p].
    """

    degree: int
    element_dofs: tuple[tuple[int, ...], ...]
    total_dofs: int
    boundary_dofs: tuple[int, int]

    def dofs(self, element: int) -> tuple[int, ...]:
        return self.element_dofs[element - 1]

    @property
    def free_count(self) -> int:
        return self.total_dofs - len(self.boundary_dofs)

    def free_index(self, dof: int) -> Optional[int]:
        """Row of ``dof`` in the reduced system, None for boundary dofs."""
        if dof in self.boundary_dofs:
            return None
        return dof - 1

    @property
    def half_bandwidth(self) -> int:
        return self.degree

    @property
    def bandwidth(self) -> int:
        return 2 * self.degree + 1


def build_dof_map(mesh: Mesh, p: int) -> DofMap:
    if p < 1:
        raise UnsupportedOrderError(f"Degree must be >= 1, got {p}")
    n = mesh.element_count
    element_dofs = []
    for i in mesh.elements:
        base = (i - 1) * p
        element_dofs.append((base, base + p, *range(base + 1, base + p)))
    total = n * p + 1
    return DofMap(
        degree=p,
        element_dofs=tuple(element_dofs),
        total_dofs=total,
        boundary_dofs=(0, total - 1),
    )
