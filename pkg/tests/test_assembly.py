"""Unit tests for Galerkin assembly, the banded solver and solution evaluation."""

import math

import numpy as np
import pytest

from ife_superconv.assembly import (
    BandedSystem,
    assemble,
    local_matrices,
    solve,
    solve_problem,
)
from ife_superconv.coefficients import (
    ManufacturedSolution,
    PiecewiseConstantCoefficient,
    ProblemSpec,
    manufactured_problem,
    one_interface_solution,
)
from ife_superconv.errors import DomainError, SingularSystemError
from ife_superconv.mesh_space import build_uniform_mesh, element_basis

ALPHA = math.pi / 6


def zero_rhs(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def unit_rhs(x):
    return np.ones_like(np.asarray(x, dtype=float))


def diffusion_problem(gamma: float = 0.0, c: float = 0.0) -> ProblemSpec:
    return manufactured_problem(one_interface_solution(1.0, 5.0, ALPHA), gamma=gamma, c=c)


def random_banded_spd(rng, n: int, u: int) -> np.ndarray:
    """Symmetric, strictly diagonally dominant matrix with half bandwidth u."""
    a = rng.uniform(-1.0, 1.0, (n, n))
    a = np.triu(np.tril(a, u), -u)
    a = 0.5 * (a + a.T)
    a[np.diag_indices(n)] = np.sum(np.abs(a), axis=1) + 1.0
    return a


class TestLocalMatrices:
    """Tests for element matrices."""

    def test_p1_hat_stiffness(self):
        """beta = 1, gamma = c = 0 gives the classical hat stiffness."""
        beta = PiecewiseConstantCoefficient.constant(1.0)
        problem = ProblemSpec(beta=beta, rhs=zero_rhs)
        mesh = build_uniform_mesh((0.0, 1.0), 8)
        matrix, load = local_matrices(element_basis(mesh, 3, 1, beta), problem, 1)
        h = 0.125
        np.testing.assert_allclose(matrix, [[1 / h, -1 / h], [-1 / h, 1 / h]], rtol=1e-14)
        np.testing.assert_allclose(load, 0.0, atol=1e-15)

    def test_interface_p1_closed_form(self):
        """The interface hat stiffness is 2/(h W) [[1, -1], [-1, 1]] with W the integral of 1/beta_hat."""
        problem = diffusion_problem()
        mesh = build_uniform_mesh((0.0, 1.0), 8, (ALPHA,))
        eb = element_basis(mesh, 5, 1, problem.beta)
        matrix, _ = local_matrices(eb, problem, 1)
        alpha_hat = eb.coefficient.breakpoints[0]
        w = (alpha_hat + 1.0) / 1.0 + (1.0 - alpha_hat) / 5.0
        expected = 2.0 / (0.125 * w) * np.array([[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_allclose(matrix, expected, rtol=1e-13)

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_interface_internal_modes_decouple(self, p):
        """Diffusion couples no two distinct interior modes."""
        problem = diffusion_problem()
        mesh = build_uniform_mesh((0.0, 1.0), 8, (ALPHA,))
        matrix, _ = local_matrices(element_basis(mesh, 5, p, problem.beta), problem, p)
        scale = np.max(np.abs(matrix))
        for m in range(2, p + 1):
            for n in range(2, p + 1):
                if m != n:
                    assert abs(matrix[m, n]) < 1e-12 * scale

    def test_convection_antisymmetric_part(self):
        """Convection adds gamma times a matrix with zero-sum rows for the hats."""
        beta = PiecewiseConstantCoefficient.constant(1.0)
        plain = ProblemSpec(beta=beta, rhs=zero_rhs)
        convective = ProblemSpec(beta=beta, gamma=2.0, rhs=zero_rhs)
        mesh = build_uniform_mesh((0.0, 1.0), 4)
        eb = element_basis(mesh, 2, 1, beta)
        difference = local_matrices(eb, convective, 1)[0] - local_matrices(eb, plain, 1)[0]
        np.testing.assert_allclose(difference, [[-1.0, 1.0], [-1.0, 1.0]], atol=1e-14)


class TestBandedSystem:
    """Tests for band storage."""

    def test_dense_round_trip(self):
        """to_dense recovers a banded matrix."""
        a = random_banded_spd(np.random.default_rng(1), 9, 2)
        system = BandedSystem.from_dense(a, np.ones(9), half_bandwidth=2)
        np.testing.assert_array_equal(system.to_dense(), a)
        np.testing.assert_allclose(system.matvec(np.arange(9.0)), a @ np.arange(9.0))

    def test_inferred_bandwidth(self):
        """Without a bandwidth the widest nonzero diagonal is used."""
        a = random_banded_spd(np.random.default_rng(2), 6, 1)
        assert BandedSystem.from_dense(a, np.zeros(6)).half_bandwidth == 1

    def test_add_outside_band(self):
        """Entries beyond the band are rejected."""
        system = BandedSystem.zeros(5, 1)
        with pytest.raises(DomainError):
            system.add(0, 3, 1.0)

    def test_norm_inf(self):
        """Row-sum norm matches numpy."""
        a = random_banded_spd(np.random.default_rng(3), 12, 3)
        system = BandedSystem.from_dense(a, np.zeros(12), half_bandwidth=3)
        assert system.norm_inf() == pytest.approx(np.linalg.norm(a, np.inf))


class TestSolve:
    """Tests for the banded direct solver."""

    def test_identity(self):
        """The identity returns the right-hand side."""
        rhs = np.array([1.0, -2.0, 3.5])
        system = BandedSystem.from_dense(np.eye(3), rhs, half_bandwidth=1)
        np.testing.assert_allclose(solve(system), rhs)

    def test_random_spd_residual(self):
        """The residual bound holds on random banded SPD systems."""
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(8, 201))
            u = int(rng.integers(0, 4))
            a = random_banded_spd(rng, n, u)
            b = rng.uniform(-1.0, 1.0, n)
            system = BandedSystem.from_dense(a, b, half_bandwidth=u)
            x = solve(system)
            residual = np.max(np.abs(a @ x - b))
            bound = 1e-12 * (np.linalg.norm(a, np.inf) * np.max(np.abs(x)) + np.max(np.abs(b)))
            assert residual <= bound

    def test_singular(self):
        """A zero matrix cannot be factorized."""
        system = BandedSystem.from_dense(np.zeros((3, 3)), np.ones(3), half_bandwidth=1)
        with pytest.raises(SingularSystemError):
            solve(system)


class TestAssemble:
    """Tests for global assembly with boundary elimination."""

    def test_p1_tridiagonal(self):
        """N=8, p=1 gives a 7x7 tridiagonal system."""
        problem = diffusion_problem(1.0, 1.0)
        system = assemble(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, 1)
        assert system.dimension == 7
        assert system.half_bandwidth == 1

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_symmetric_positive_definite(self, p):
        """gamma = 0 gives a symmetric matrix, positive definite for c >= 0."""
        problem = diffusion_problem(0.0, 1.0)
        system = assemble(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, p)
        a = system.to_dense()
        assert np.max(np.abs(a - a.T)) < 1e-12 * np.max(np.abs(a))
        np.linalg.cholesky(a)

    def test_domain_mismatch(self):
        """The mesh must cover the problem domain."""
        problem = diffusion_problem()
        with pytest.raises(DomainError):
            assemble(build_uniform_mesh((0.0, 2.0), 8, (ALPHA,)), problem, 1)


class TestSolveProblem:
    """Tests for full solves and solution evaluation."""

    def test_zero_forcing(self):
        """f = 0 with zero boundary data gives u_h = 0."""
        beta = PiecewiseConstantCoefficient(breakpoints=(ALPHA,), values=(1.0, 5.0))
        problem = ProblemSpec(beta=beta, gamma=1.0, c=1.0, rhs=zero_rhs)
        solution = solve_problem(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, 2)
        np.testing.assert_allclose(solution.coefficients, 0.0, atol=1e-15)

    def test_classical_p1_nodal_values(self):
        """-u'' = 1 on (0, 1): P1 nodal values are x(1 - x)/2."""
        problem = ProblemSpec(beta=PiecewiseConstantCoefficient.constant(1.0), rhs=unit_rhs)
        mesh = build_uniform_mesh((0.0, 1.0), 8)
        solution = solve_problem(mesh, problem, 1)
        x = np.asarray(mesh.points)
        np.testing.assert_allclose(solution.evaluate(x), x * (1 - x) / 2, atol=1e-14)

    def test_boundary_values(self):
        """The solution takes the Dirichlet data at both ends."""
        problem = diffusion_problem(1.0, 1.0)
        solution = solve_problem(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, 2)
        assert solution.evaluate(0.0) == pytest.approx(problem.boundary_values[0], abs=1e-15)
        assert solution.evaluate(1.0) == pytest.approx(problem.boundary_values[1], abs=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_continuity_at_vertices(self, p):
        """Left and right element evaluations agree at every node."""
        problem = diffusion_problem(1.0, 1.0)
        mesh = build_uniform_mesh((0.0, 1.0), 8, (ALPHA,))
        solution = solve_problem(mesh, problem, p)
        x = np.asarray(mesh.points[1:-1])
        np.testing.assert_allclose(
            solution.evaluate(x, "left"), solution.evaluate(x, "right"), atol=1e-13
        )

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_exact_at_nodes_for_diffusion(self, p):
        """gamma = c = 0 gives nodal values equal to u(x_i)."""
        problem = diffusion_problem()
        for n in (8, 16, 32):
            mesh = build_uniform_mesh((0.0, 1.0), n, (ALPHA,))
            solution = solve_problem(mesh, problem, p)
            x = np.asarray(mesh.points)
            assert np.max(np.abs(solution.evaluate(x) - problem.exact(x))) < 1e-10

    def test_flux_across_interface(self):
        """The discrete flux is continuous at the interface."""
        problem = diffusion_problem(1.0, 1.0)
        solution = solve_problem(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, 2)
        left = solution.evaluate_flux(ALPHA, "left")
        right = solution.evaluate_flux(ALPHA, "right")
        assert left == pytest.approx(right, abs=1e-12)
        assert left == pytest.approx(-math.sin(ALPHA), abs=1e-3)

    def test_evaluate_outside_domain(self):
        """Points beyond the domain raise."""
        problem = diffusion_problem()
        solution = solve_problem(build_uniform_mesh((0.0, 1.0), 8, (ALPHA,)), problem, 1)
        with pytest.raises(DomainError):
            solution.evaluate(1.5)

    def test_galerkin_patch_test(self):
        """A member of S_p is reproduced by the solver."""
        beta = PiecewiseConstantCoefficient.constant(2.0)
        mesh = build_uniform_mesh((0.0, 1.0), 4)

        def rhs(x):
            # u = x^2 gives -(2 u')' = -4
            return -4.0 * np.ones_like(np.asarray(x, dtype=float))

        problem = ProblemSpec(beta=beta, rhs=rhs, boundary_values=(0.0, 1.0))
        solution = solve_problem(mesh, problem, 2)
        x = np.linspace(0.0, 1.0, 17)
        np.testing.assert_allclose(solution.evaluate(x), x**2, atol=1e-12)

    @pytest.mark.parametrize("p", [2, 3])
    @pytest.mark.parametrize(
        "breakpoints,values",
        [((ALPHA,), (1.0, 5.0)), ((ALPHA, ALPHA + 0.06), (1.0, 5.0, 100.0))],
    )
    def test_galerkin_patch_test_with_interfaces(self, p, breakpoints, values):
        """u with beta u' = x + 0.3 lies in S_p and is reproduced across interface elements."""
        beta = PiecewiseConstantCoefficient(breakpoints=breakpoints, values=values)
        exact = ManufacturedSolution(
            beta=beta,
            potential=lambda x: 0.5 * np.asarray(x) ** 2 + 0.3 * np.asarray(x),
            flux_fn=lambda x: np.asarray(x) + 0.3,
            flux_derivative_fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        )
        problem = manufactured_problem(exact, gamma=1.0, c=1.0)
        mesh = build_uniform_mesh((0.0, 1.0), 8, breakpoints)
        assert mesh.interface_elements
        solution = solve_problem(mesh, problem, p)

        x = np.linspace(0.0, 1.0, 161)
        scale = float(np.max(np.abs(exact.value(x))))
        np.testing.assert_allclose(solution.evaluate(x), exact.value(x), atol=1e-11 * scale)
        np.testing.assert_allclose(solution.evaluate_flux(x), exact.flux(x), atol=1e-10)
