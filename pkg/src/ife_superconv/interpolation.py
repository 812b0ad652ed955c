"""IFE interpolation of a manufactured solution.

Vertex coefficients are nodal values. Interior coefficients are the
energy projections

    u_n = <u, phi_n> / <phi_n, phi_n>,   <u, v> = integral of beta u' v'

which only need the flux beta*u' of the exact solution, so interface
elements are handled with the same formula as regular ones.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assembly import IFESolution
from .coefficients import ManufacturedSolution, PiecewiseConstantCoefficient
from .config import settings
from .mesh_space import ElementBasis, Mesh, build_dof_map, element_bases

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InterpolantCoefficients(IFESolution):
    """I_h u with the same dof layout as a solve."""


def _energy_norms(eb: ElementBasis, p: int) -> np.ndarray:
    """integral of beta_hat (phi_n')^2 over [-1, 1] for every local mode."""
    tables = eb.tables(settings.assembly_points(p))
    return eb.flux_scale * np.sum(tables.weights * tables.fluxes * tables.derivatives, axis=1)


def _flux_moments(exact: ManufacturedSolution, eb: ElementBasis, p: int) -> np.ndarray:
    """integral of (beta u') phi_n' dx for every local mode."""
    tables = eb.tables(settings.exact_points(p))
    x = eb.from_reference(tables.nodes)
    flux = np.asarray(exact.flux(x))
    return (tables.derivatives * tables.weights) @ flux


def interpolate(
    exact: ManufacturedSolution,
    mesh: Mesh,
    p: int,
    beta: PiecewiseConstantCoefficient,
    bases: Optional[dict[int, ElementBasis]] = None,
) -> InterpolantCoefficients:
    """Coefficients of I_h u in S_p(T_h)."""
    dof_map = build_dof_map(mesh, p)
    bases = bases or element_bases(mesh, p, beta)

    coefficients = np.empty(dof_map.total_dofs)
    coefficients[:: p] = exact.value(np.asarray(mesh.points))
    for element in mesh.elements if p >= 2 else ():
        eb = bases[element]
        dofs = dof_map.dofs(element)
        norms = _energy_norms(eb, p)
        moments = _flux_moments(exact, eb, p)
        # physical <phi_n, phi_n> carries a 2/h the moments do not
        for n in range(2, p + 1):
            coefficients[dofs[n]] = 0.5 * eb.h * moments[n] / norms[n]

    return InterpolantCoefficients(
        mesh=mesh, degree=p, coefficients=coefficients, dof_map=dof_map, bases=bases
    )


def orthogonality_residual(
    exact: ManufacturedSolution,
    interpolant: IFESolution,
    mesh: Mesh,
    p: int,
) -> float:
    """Largest normalized |integral of beta (u - I_h u)' v'| over elements and local modes v.

    Each integral is divided by sqrt(E_u * E_v) with E the element energy
    integral of beta (.)'^2.
    """
    worst = 0.0
    for element in mesh.elements:
        eb = interpolant.bases[element]
        tables = eb.tables(settings.exact_points(p))
        x = eb.from_reference(tables.nodes)
        h = eb.h

        local = interpolant.local_coefficients(element)
        discrete_flux = (2.0 / h) * eb.flux_scale * (local @ tables.fluxes)
        error_flux = np.asarray(exact.flux(x)) - discrete_flux
        residuals = (tables.derivatives * tables.weights) @ error_flux

        beta = np.asarray(exact.beta(x))
        energy_u = 0.5 * h * float(np.sum(tables.weights * np.asarray(exact.flux(x)) ** 2 / beta))
        if energy_u <= 0.0:
            energy_u = 1.0
        energy_v = (2.0 / h) * _energy_norms(eb, p)

        worst = max(worst, float(np.max(np.abs(residuals) / np.sqrt(energy_u * energy_v))))

    logger.debug(f"Orthogonality residual on N={mesh.element_count}, p={p}: {worst:.3e}")
    return worst
