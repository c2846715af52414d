import numpy as np
import pytest

from dirac_hartree.dirichlet import DirichletBasis
from dirac_hartree.fields import DensityField, Grid2D
from dirac_hartree.poisson import (
    interior_lattice,
    kernel_majorant,
    solve_poisson_dirichlet,
    solve_poisson_torus,
    verify_kernel_bound,
)
from dirac_hartree.spectral import fft

from conftest import rel
from oracles import free_space_potential_at_center, kernel_majorant_dblquad


@pytest.fixture(scope="module")
def square():
    return DirichletBasis.rectangle(np.pi, np.pi, 16, 64)


class TestTorus:
    def test_single_mode(self, grid_pi):
        x1, _ = grid_pi.mesh()
        v = solve_poisson_torus(DensityField(grid_pi, np.cos(x1)))
        assert rel(v.values, np.cos(x1) / 2) < 1e-14

    def test_constant_gives_zero(self, grid_pi):
        v = solve_poisson_torus(DensityField(grid_pi, np.full(grid_pi.shape, 3.0)))
        assert np.max(np.abs(v.values)) == 0.0

    def test_gaussian_against_free_space_quadrature(self):
        g = Grid2D(16.0, 256)
        w = 0.5
        x1, x2 = g.mesh()
        n = np.exp(-(x1**2 + x2**2) / (2 * w**2))
        v = solve_poisson_torus(DensityField(g, n - n.mean()))
        centre = v.values[g.points_per_axis // 2, g.points_per_axis // 2]
        oracle = free_space_potential_at_center(lambda r: np.exp(-r**2 / (2 * w**2)), 40 * w)
        assert abs(centre - oracle) / oracle < 0.05

    def test_linearity_and_self_adjointness(self, grid_pi, rng):
        n1, n2 = rng.standard_normal((2,) + grid_pi.shape)
        s = lambda n: solve_poisson_torus(DensityField(grid_pi, n)).values
        assert rel(s(2 * n1 - 3 * n2), 2 * s(n1) - 3 * s(n2)) < 1e-13
        a, b = np.sum(s(n1) * n2), np.sum(n1 * s(n2))
        assert abs(a - b) <= 1e-12 * abs(a)

    def test_energy_identity(self, grid_pi, rng):
        n = rng.uniform(0, 1, grid_pi.shape)
        v = solve_poisson_torus(DensityField(grid_pi, n)).values
        r = grid_pi.frequency_modulus()
        lhs = np.sum(r * np.abs(fft(v)) ** 2) * grid_pi.cell_area / grid_pi.points_per_axis**2
        rhs = 0.5 * np.sum(v * n) * grid_pi.cell_area
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_geometry_check(self, square):
        with pytest.raises(ValueError):
            solve_poisson_torus(DensityField(square.grid, np.zeros(square.grid.shape)))


class TestDirichlet:
    def test_single_mode(self, square):
        e11 = square.eigenfunction(1, 1)
        v = solve_poisson_dirichlet(DensityField(square.grid, e11), square)
        assert rel(v.values, e11 / (2 * np.sqrt(2))) < 1e-14

    def test_zero(self, square):
        v = solve_poisson_dirichlet(DensityField(square.grid, np.zeros(square.grid.shape)), square)
        assert np.all(v.values == 0)

    def test_two_modes_coefficientwise(self, square):
        n = square.eigenfunction(1, 1) + square.eigenfunction(2, 1)
        v = solve_poisson_dirichlet(DensityField(square.grid, n), square)
        c = square.forward(v.values)
        assert c[square.index_of(1, 1)] == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-14)
        assert c[square.index_of(2, 1)] == pytest.approx(1 / (2 * np.sqrt(5)), abs=1e-14)
        others = np.delete(c, [square.index_of(1, 1), square.index_of(2, 1)])
        assert np.max(np.abs(others)) < 1e-14

    def test_linearity_and_symmetry(self, square, rng):
        n1 = square.inverse(rng.standard_normal(square.size))
        n2 = square.inverse(rng.standard_normal(square.size))
        s = lambda n: solve_poisson_dirichlet(DensityField(square.grid, n), square).values
        assert rel(s(0.5 * n1 + 4 * n2), 0.5 * s(n1) + 4 * s(n2)) < 1e-13
        a, b = np.sum(s(n1) * n2), np.sum(n1 * s(n2))
        assert abs(a - b) <= 1e-12 * abs(a)

    def test_positivity(self, square):
        f = np.clip(square.eigenfunction(1, 1) + 0.3 * square.eigenfunction(3, 3), 0, None)
        f = square.project(f)
        f = np.clip(f, 0, None)
        v = solve_poisson_dirichlet(DensityField(square.grid, f), square)
        assert np.min(v.values) >= -1e-10 * DensityField(square.grid, f).norm()

    def test_basis_mismatch(self, square, grid_pi):
        with pytest.raises(ValueError):
            solve_poisson_dirichlet(DensityField(grid_pi, np.zeros(grid_pi.shape)), square)


class TestKernelBound:
    def test_majorant_against_adaptive_quadrature(self, square):
        c = np.zeros(square.size)
        c[square.index_of(1, 1)] = 1.0
        f = lambda y1, y2: (2 / np.pi) * np.sin(y1) * np.sin(y2)
        for x in ((np.pi / 2, np.pi / 2), (0.4, 2.5)):
            assert kernel_majorant(c, square, x) == pytest.approx(kernel_majorant_dblquad(f, x, np.pi, np.pi), rel=1e-7)

    def test_single_mode_passes(self, square):
        e11 = square.eigenfunction(1, 1)
        report = verify_kernel_bound(DensityField(square.grid, e11), square, interior_lattice(np.pi, np.pi, 5))
        assert report.passed
        centre = report.rows[12]
        assert centre[2] == pytest.approx(float(square.evaluate(np.eye(square.size)[0], [[np.pi / 2, np.pi / 2]])[0]) / np.sqrt(2), rel=1e-12)
        assert report.to_csv().splitlines()[0] == "x1,x2,u,majorant,margin"
        assert len(report.to_csv().splitlines()) == 26

    def test_zero_passes(self, square):
        report = verify_kernel_bound(DensityField(square.grid, np.zeros(square.grid.shape)), square, [[1.0, 1.0]])
        assert report.passed and report.rows[0][2] == 0.0

    def test_negative_f_rejected(self, square):
        with pytest.raises(ValueError):
            verify_kernel_bound(DensityField(square.grid, -square.eigenfunction(1, 1)), square, [[1.0, 1.0]])
