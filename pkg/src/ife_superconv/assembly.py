"""Galerkin assembly, banded solve and evaluation of the discrete solution.

The bilinear form is

    a(u, v) = (beta u', v') + (gamma u', v) + (c u, v)

over S_p(T_h). Dirichlet data are eliminated: boundary dofs are fixed to
``problem.boundary_values`` and their couplings moved to the load.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import LinAlgError, solve_banded

from .coefficients import ProblemSpec, as_output
from .config import settings
from .errors import DomainError, SingularSystemError
from .mesh_space import DofMap, ElementBasis, Mesh, build_dof_map, element_bases

logger = logging.getLogger(__name__)

RESIDUAL_FACTOR = 1e-12


def local_matrices(
    eb: ElementBasis, problem: ProblemSpec, p: int
) -> tuple[np.ndarray, np.ndarray]:
    """Element matrix and load vector in local mode order [phi_0, phi_1, ..., phi_p].

    Bilinear terms use p+2 Gauss points per piece, the load p+6, both split at
    the interfaces inside the element.
    """
    h = eb.h
    tables = eb.tables(settings.assembly_points(p))
    w = tables.weights
    fluxes = eb.flux_scale * tables.fluxes

    diffusion = (2.0 / h) * (tables.derivatives * w) @ fluxes.T
    convection = (tables.values * w) @ tables.derivatives.T
    reaction = 0.5 * h * (tables.values * w) @ tables.values.T
    matrix = diffusion + problem.gamma * convection + problem.c * reaction

    load_tables = eb.tables(settings.exact_points(p))
    x = eb.from_reference(load_tables.nodes)
    f = np.broadcast_to(np.asarray(problem.rhs(x), dtype=float), x.shape)
    load = 0.5 * h * (load_tables.values * load_tables.weights) @ f
    return matrix, load


@dataclass
class BandedSystem:
    """Square system in LAPACK band storage: A[i, j] lives at band[u + i - j, j]."""

    dimension: int
    half_bandwidth: int
    band: np.ndarray
    rhs: np.ndarray

    @classmethod
    def zeros(cls, dimension: int, half_bandwidth: int) -> "BandedSystem":
        return cls(
            dimension=dimension,
            half_bandwidth=half_bandwidth,
            band=np.zeros((2 * half_bandwidth + 1, dimension)),
            rhs=np.zeros(dimension),
        )

    @classmethod
    def from_dense(
        cls, matrix: ArrayLike, rhs: ArrayLike, half_bandwidth: Optional[int] = None
    ) -> "BandedSystem":
        """Band storage of a dense matrix; entries outside the band are dropped."""
        a = np.asarray(matrix, dtype=float)
        n = a.shape[0]
        if half_bandwidth is None:
            rows, cols = np.nonzero(a)
            half_bandwidth = int(np.max(np.abs(rows - cols))) if rows.size else 0
        system = cls.zeros(n, half_bandwidth)
        for i, j, _ in system._diagonals():
            system.band[half_bandwidth + i - j, j] = a[i, j]
        system.rhs[:] = np.asarray(rhs, dtype=float)
        return system

    @property
    def bandwidth(self) -> int:
        return 2 * self.half_bandwidth + 1

    def _diagonals(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        n, u = self.dimension, self.half_bandwidth
        for k in range(2 * u + 1):
            offset = k - u
            j = np.arange(max(0, -offset), min(n, n - offset))
            yield j + offset, j, self.band[k, j]

    def add(self, i: int, j: int, value: float) -> None:
        u = self.half_bandwidth
        if abs(i - j) > u:
            raise DomainError(f"Entry ({i}, {j}) outside half bandwidth {u}")
        self.band[u + i - j, j] += value

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.dimension, self.dimension))
        for i, j, v in self._diagonals():
            a[i, j] = v
        return a

    def matvec(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.zeros(self.dimension)
        for i, j, v in self._diagonals():
            y[i] += v * x[j]
        return y

    def norm_inf(self) -> float:
        row_sums = np.zeros(self.dimension)
        for i, _, v in self._diagonals():
            row_sums[i] += np.abs(v)
        return float(np.max(row_sums)) if self.dimension else 0.0


def assemble(
    mesh: Mesh,
    problem: ProblemSpec,
    p: int,
    bases: Optional[dict[int, ElementBasis]] = None,
    dof_map: Optional[DofMap] = None,
) -> BandedSystem:
    """Scatter element contributions into the reduced banded system."""
    if not np.allclose(mesh.domain, problem.domain, rtol=0.0, atol=mesh.tolerance):
        raise DomainError(f"Mesh domain {mesh.domain} does not match problem {problem.domain}")
    dof_map = dof_map or build_dof_map(mesh, p)
    bases = bases or element_bases(mesh, p, problem.beta)

    known = dict(zip(dof_map.boundary_dofs, problem.boundary_values))
    system = BandedSystem.zeros(dof_map.free_count, dof_map.half_bandwidth)

    for element in mesh.elements:
        matrix, load = local_matrices(bases[element], problem, p)
        dofs = dof_map.dofs(element)
        for a, ga in enumerate(dofs):
            row = dof_map.free_index(ga)
            if row is None:
                continue
            system.rhs[row] += load[a]
            for b, gb in enumerate(dofs):
                col = dof_map.free_index(gb)
                if col is None:
                    system.rhs[row] -= matrix[a, b] * known[gb]
                else:
                    system.add(row, col, matrix[a, b])
    return system


def solve(system: BandedSystem) -> np.ndarray:
    """Banded LU with partial pivoting (LAPACK gbsv)."""
    u = system.half_bandwidth
    try:
        x = solve_banded((u, u), system.band, system.rhs)
    except (LinAlgError, ValueError) as e:
        raise SingularSystemError(f"Banded factorization failed: {e}") from e
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("Banded solve produced non-finite values")

    residual = float(np.max(np.abs(system.matvec(x) - system.rhs), initial=0.0))
    bound = RESIDUAL_FACTOR * (
        system.norm_inf() * float(np.max(np.abs(x), initial=0.0))
        + float(np.max(np.abs(system.rhs), initial=0.0))
    )
    if residual > bound:
        logger.warning(f"Solve residual {residual:.3e} exceeds bound {bound:.3e}")
    return x


@dataclass(frozen=True, eq=False)
class IFESolution:
    """Discrete solution: full coefficient vector, boundary dofs included."""

    mesh: Mesh
    degree: int
    coefficients: np.ndarray
    dof_map: DofMap
    bases: dict[int, ElementBasis]

    def local_coefficients(self, element: int) -> np.ndarray:
        return self.coefficients[list(self.dof_map.dofs(element))]

    def _by_element(self, x: ArrayLike, side: Optional[str], flux: bool):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        elements = np.atleast_1d(self.mesh.locate(xs, side))
        out = np.empty_like(xs)
        for element in np.unique(elements):
            mask = elements == element
            eb = self.bases[int(element)]
            local = self.local_coefficients(int(element))
            if flux:
                out[mask] = eb.evaluate_flux(local, xs[mask], side)
            else:
                out[mask] = eb.evaluate(local, xs[mask], side)
        return as_output(out.reshape(np.shape(x)), x)

    def evaluate(self, x: ArrayLike, side: Optional[str] = None):
        """u_h(x); at a mesh node or interface the left limit unless ``side="right"``."""
        return self._by_element(x, side, flux=False)

    def evaluate_flux(self, x: ArrayLike, side: Optional[str] = None):
        """beta(x) u_h'(x), same one-sided convention as ``evaluate``."""
        return self._by_element(x, side, flux=True)


def solve_problem(mesh: Mesh, problem: ProblemSpec, p: int) -> IFESolution:
    """Build bases, assemble, solve and wrap the result."""
    dof_map = build_dof_map(mesh, p)
    bases = element_bases(mesh, p, problem.beta)
    system = assemble(mesh, problem, p, bases=bases, dof_map=dof_map)
    free = solve(system)

    coefficients = np.empty(dof_map.total_dofs)
    coefficients[1:-1] = free
    coefficients[0], coefficients[-1] = problem.boundary_values
    logger.info(
        f"Solved N={mesh.element_count}, p={p}, dofs={dof_map.free_count}, "
        f"interface elements={list(mesh.interface_elements)}"
    )
    return IFESolution(
        mesh=mesh, degree=p, coefficients=coefficients, dof_map=dof_map, bases=bases
    )
