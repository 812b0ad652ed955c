"""Superconvergence points, error norms and convergence-rate regression."""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .assembly import IFESolution, solve_problem
from .coefficients import ManufacturedSolution, ProblemSpec
from .config import settings
from .errors import DomainError, InsufficientDataError
from .genpoly import Basis, legendre_roots, lobatto_roots
from .mesh_space import ElementBasis, Mesh, build_uniform_mesh

logger = logging.getLogger(__name__)

COLUMNS = ("node", "linf", "lobatto", "gauss_flux", "l2", "h1")


@dataclass(frozen=True)
class SuperconvergencePoints:
    """Physical Lobatto and Gauss points per element, plus the mesh nodes.

    ``lobatto_points`` holds the interior roots of the degree p+1 Lobatto
    function (empty for p = 1); ``gauss_points`` the roots of the degree p
    Legendre polynomial. Interface elements use the generalized families.
    """

    nodes: tuple[float, ...]
    lobatto_points: tuple[tuple[float, ...], ...]
    gauss_points: tuple[tuple[float, ...], ...]

    def all_lobatto(self) -> np.ndarray:
        return np.array([x for element in self.lobatto_points for x in element])

    def all_gauss(self) -> np.ndarray:
        return np.array([x for element in self.gauss_points for x in element])

    def special(self) -> np.ndarray:
        """Nodes, Lobatto and Gauss points, sorted and deduplicated."""
        return np.unique(np.concatenate([self.nodes, self.all_lobatto(), self.all_gauss()]))


@lru_cache(maxsize=256)
def _reference_points(basis: Basis, p: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    lobatto = tuple(lobatto_roots(basis, p + 1)) if p >= 2 else ()
    return lobatto, tuple(legendre_roots(basis, p))


def superconvergence_points(
    mesh: Mesh, p: int, bases: dict[int, ElementBasis]
) -> SuperconvergencePoints:
    lobatto, gauss = [], []
    for element in mesh.elements:
        eb = bases[element]
        ref_lobatto, ref_gauss = _reference_points(eb.basis, p)
        lobatto.append(tuple(np.atleast_1d(eb.from_reference(np.array(ref_lobatto))).tolist()))
        gauss.append(tuple(np.atleast_1d(eb.from_reference(np.array(ref_gauss))).tolist()))
    return SuperconvergencePoints(
        nodes=mesh.points, lobatto_points=tuple(lobatto), gauss_points=tuple(gauss)
    )


@dataclass(frozen=True)
class ErrorReport:
    """The six error measures of one solve. ``lobatto`` is None for p = 1."""

    h: float
    node: float
    linf: float
    lobatto: Optional[float]
    gauss_flux: float
    l2: float
    h1: float

    def column(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def as_row(self) -> tuple[Optional[float], ...]:
        return tuple(self.column(name) for name in COLUMNS)


def _max_abs(values: np.ndarray) -> float:
    return float(np.max(np.abs(values), initial=0.0))


def linf_samples(mesh: Mesh, points: SuperconvergencePoints) -> np.ndarray:
    """Sampling set for the max-norm error.

    Uniform points per noninterface element, uniform points per sub-element
    of an interface element, together with the nodes and Lobatto points.
    """
    samples = [np.asarray(mesh.points), points.all_lobatto()]
    for element in mesh.elements:
        lo, hi = mesh.bounds(element)
        interfaces = mesh.interface_elements.get(element)
        if interfaces is None:
            samples.append(np.linspace(lo, hi, settings.linf_points_regular))
            continue
        edges = (lo, *interfaces, hi)
        for a, b in zip(edges[:-1], edges[1:]):
            samples.append(np.linspace(a, b, settings.linf_points_interface))
    return np.unique(np.concatenate(samples))


def error_report(
    solution: IFESolution,
    exact: ManufacturedSolution,
    points: Optional[SuperconvergencePoints] = None,
) -> ErrorReport:
    """Errors of ``solution`` against ``exact``.

    Node, Lobatto and Gauss-flux errors are maxima over the point sets, L2
    and the H1 seminorm use interface-split Gauss rules with p+6 points.
    """
    mesh, p = solution.mesh, solution.degree
    points = points or superconvergence_points(mesh, p, solution.bases)

    nodes = np.asarray(points.nodes)
    node = _max_abs(exact.value(nodes) - solution.evaluate(nodes))

    lobatto = None
    if p >= 2:
        x = points.all_lobatto()
        lobatto = _max_abs(exact.value(x) - solution.evaluate(x))

    x = points.all_gauss()
    gauss_flux = _max_abs(exact.flux(x) - solution.evaluate_flux(x))

    x = linf_samples(mesh, points)
    linf = _max_abs(exact.value(x) - solution.evaluate(x))

    l2_sq, h1_sq = 0.0, 0.0
    for element in mesh.elements:
        eb = solution.bases[element]
        tables = eb.tables(settings.exact_points(p))
        x = eb.from_reference(tables.nodes)
        local = solution.local_coefficients(element)
        e = np.asarray(exact.value(x)) - local @ tables.values
        discrete_derivative = (
            (2.0 / eb.h) * eb.flux_scale * (local @ tables.fluxes) / np.asarray(exact.beta(x))
        )
        de = np.asarray(exact.derivative(x)) - discrete_derivative
        l2_sq += 0.5 * eb.h * float(np.dot(tables.weights, e * e))
        h1_sq += 0.5 * eb.h * float(np.dot(tables.weights, de * de))

    return ErrorReport(
        h=mesh.h,
        node=node,
        linf=linf,
        lobatto=lobatto,
        gauss_flux=gauss_flux,
        l2=float(np.sqrt(l2_sq)),
        h1=float(np.sqrt(h1_sq)),
    )


def regress_rate(
    h_values: Sequence[float], errors: Sequence[Optional[float]], floor: float = 0.0
) -> float:
    """Least-squares slope of log(error) against log(h).

    Errors that are missing, nonpositive or at most ``floor`` are dropped.
    """
    h = np.asarray(h_values, dtype=float)
    e = np.array([np.nan if v is None else v for v in errors], dtype=float)
    keep = np.isfinite(e) & (e > 0.0) & (e > floor)
    if np.count_nonzero(keep) < 3:
        raise InsufficientDataError(
            f"Need at least 3 usable errors, got {np.count_nonzero(keep)} of {len(e)}"
        )
    slope, _ = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)
    return float(slope)


def pointwise_errors(
    solution: IFESolution,
    exact: ManufacturedSolution,
    points: SuperconvergencePoints,
    density: int = 20,
) -> list[tuple[float, float, float, bool]]:
    """(x, u - u_h, beta u' - beta u_h', is_special_point) rows sorted by x."""
    mesh = solution.mesh
    special = points.special()
    uniform = np.unique(
        np.concatenate([np.linspace(*mesh.bounds(e), density + 2)[1:-1] for e in mesh.elements])
    )
    tol = 1e-12 * (mesh.domain[1] - mesh.domain[0])
    near = np.min(np.abs(uniform[:, None] - special[None, :]), axis=1) <= tol
    uniform = uniform[~near]

    x = np.concatenate([uniform, special])
    flags = np.concatenate([np.zeros(uniform.size, bool), np.ones(special.size, bool)])
    order = np.argsort(x, kind="stable")
    x, flags = x[order], flags[order]

    u_err = np.asarray(exact.value(x)) - np.asarray(solution.evaluate(x))
    flux_err = np.asarray(exact.flux(x)) - np.asarray(solution.evaluate_flux(x))
    return [
        (float(xi), float(du), float(df), bool(flag))
        for xi, du, df, flag in zip(x, u_err, flux_err, flags)
    ]


@dataclass
class ConvergenceStudy:
    """One report per mesh and a regression rate per error column."""

    degree: int
    mesh_sizes: tuple[int, ...]
    reports: list[ErrorReport] = field(default_factory=list)
    rates: dict[str, Optional[float]] = field(default_factory=dict)
    solutions: list[IFESolution] = field(default_factory=list)
    points: list[SuperconvergencePoints] = field(default_factory=list)

    def column(self, name: str) -> list[Optional[float]]:
        return [report.column(name) for report in self.reports]


def _column_rate(
    name: str, h: list[float], values: list[Optional[float]], floor: float
) -> Optional[float]:
    if all(v is None for v in values):
        return None
    dropped = [v for v in values if v is not None and v <= floor]
    if dropped:
        logger.warning(f"Column {name}: {len(dropped)} values at or below floor {floor:.3e}")
    try:
        return regress_rate(h, values, floor)
    except InsufficientDataError as e:
        logger.warning(f"Column {name}: no rate ({e})")
        return None


def convergence_study(
    problem: ProblemSpec, p: int, mesh_sizes: Sequence[int]
) -> ConvergenceStudy:
    """Solve on uniform meshes with N in ``mesh_sizes`` and regress each error column."""
    if not mesh_sizes:
        raise DomainError("mesh_sizes must be nonempty")
    if problem.exact is None:
        raise DomainError("Convergence studies need a problem with an exact solution")

    study = ConvergenceStudy(degree=p, mesh_sizes=tuple(mesh_sizes))
    scale = 0.0
    for n in mesh_sizes:
        mesh = build_uniform_mesh(problem.domain, n, problem.beta.breakpoints)
        solution = solve_problem(mesh, problem, p)
        points = superconvergence_points(mesh, p, solution.bases)
        report = error_report(solution, problem.exact, points)
        logger.info(f"N={n}: " + ", ".join(f"{k}={v}" for k, v in zip(COLUMNS, report.as_row())))
        study.reports.append(report)
        study.solutions.append(solution)
        study.points.append(points)
        scale = max(scale, _max_abs(np.asarray(problem.exact.value(np.asarray(mesh.points)))))

    floor = settings.floor_factor * np.finfo(float).eps * scale
    h = [report.h for report in study.reports]
    study.rates = {name: _column_rate(name, h, study.column(name), floor) for name in COLUMNS}
    logger.info(f"Rates p={p}: {study.rates}")
    return study
