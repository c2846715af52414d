"""Self-consistent potential V = 1/2 (-Laplacian)^(-1/2) n in both geometries.

Also the kernel-bound verifier: for f >= 0 the solution of A^(1/2) u = f
satisfies 0 <= u(x) <= (1/2pi) int f(y)/|x-y| dy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirichlet import DirichletBasis
from .fields import DensityField, Grid2D
from .reporting import fmt
from .spectral import fft, ifft


@dataclass(frozen=True, eq=False)
class PotentialField:
    grid: object
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def torus_potential(n: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Array kernel of :func:`solve_poisson_torus`; mean of V is zero."""
    r = grid.frequency_modulus()
    inv = np.zeros_like(r)
    inv[r > 0] = 0.5 / r[r > 0]
    v = ifft(fft(n) * inv)
    scale = float(np.max(np.abs(v.real))) + float(np.max(np.abs(n)))
    if np.max(np.abs(v.imag)) > 1e-13 * scale:
        raise ArithmeticError("spectral Poisson inversion left a non-negligible imaginary part")
    return v.real


def solve_poisson_torus(n: DensityField) -> PotentialField:
    """2 (-Laplacian)^(1/2) V = n on the torus, zero-mean gauge."""
    if not isinstance(n.grid, Grid2D):
        raise ValueError("torus solve needs a periodic grid")
    return PotentialField(n.grid, torus_potential(np.asarray(n.values), n.grid))


def dirichlet_potential(n: np.ndarray, basis: DirichletBasis) -> np.ndarray:
    c = basis.forward(n)
    return basis.inverse(0.5 * c / np.sqrt(basis.eigenvalues))


def solve_poisson_dirichlet(n: DensityField, basis: DirichletBasis) -> PotentialField:
    """V = 1/2 sum_p mu_p^(-1/2) n_p e_p, truncated to the retained modes."""
    if n.grid != basis.grid:
        raise ValueError("density is not sampled on the basis grid")
    return PotentialField(n.grid, dirichlet_potential(np.asarray(n.values), basis))


# -- kernel bound ------------------------------------------------------------


def _rect_ray_lengths(x, theta, a, b):
    """Distance from interior point x to the boundary of [0,a]x[0,b] along theta."""
    c, s = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore"):
        tx = np.where(c > 0, (a - x[0]) / c, np.where(c < 0, -x[0] / c, np.inf))
        ty = np.where(s > 0, (b - x[1]) / s, np.where(s < 0, -x[1] / s, np.inf))
    return np.minimum(tx, ty)


def kernel_majorant(coeffs: np.ndarray, basis: DirichletBasis, x, order: int = 48) -> float:
    """(1/2pi) int_Omega f(y)/|x-y| dy for f given by basis coefficients.

    Polar coordinates centred at x remove the 1/|x-y| singularity: the
    integrand becomes f(x + r e_theta) dr dtheta. The angle range is split
    at the four corner directions so that the ray length is smooth on
    every piece; Gauss-Legendre is used in both variables.
    """
    a, b = basis.grid.width, basis.grid.height
    x = np.asarray(x, dtype=float)
    corners = [np.arctan2(cy - x[1], cx - x[0]) for cx, cy in ((a, 0), (a, b), (0, b), (0, 0))]
    cuts = np.sort(np.mod(corners, 2 * np.pi))
    cuts = np.concatenate([cuts, [cuts[0] + 2 * np.pi]])
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        theta = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * weights
        R = _rect_ray_lengths(x, theta, a, b)
        r = 0.5 * R[:, None] * (nodes[None, :] + 1.0)
        wr = 0.5 * R[:, None] * weights[None, :]
        pts = np.stack([x[0] + r * np.cos(theta)[:, None], x[1] + r * np.sin(theta)[:, None]], axis=-1)
        f = basis.evaluate(coeffs, pts.reshape(-1, 2)).real.reshape(r.shape)
        total += float(np.sum(wt[:, None] * wr * f))
    return total / (2.0 * np.pi)


@dataclass(frozen=True)
class KernelBoundReport:
    rows: tuple  # (x1, x2, u, majorant, margin)
    tolerance: float
    passed: bool

    def to_csv(self) -> str:
        lines = ["x1,x2,u,majorant,margin"]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def verify_kernel_bound(f: DensityField, basis: DirichletBasis, sample_points) -> KernelBoundReport:
    """Check 0 <= A^(-1/2) f <= (1/2pi) int f/|x-y| at the sample points."""
    if not basis.is_rectangle:
        raise ValueError("the kernel bound is checked on rectangles")
    values = np.asarray(f.values)
    norm = f.norm()
    if np.any(values < 0):
        raise ValueError("kernel bound requires f >= 0 pointwise")
    coeffs = basis.forward(values)
    u_coeffs = coeffs / np.sqrt(basis.eigenvalues)
    tol = 1e-8 * norm
    rows = []
    passed = True
    for x in np.atleast_2d(np.asarray(sample_points, dtype=float)):
        u = float(basis.evaluate(u_coeffs, x[None, :])[0].real)
        maj = kernel_majorant(coeffs, basis, x)
        margin = maj - u
        passed &= bool(-tol <= u <= maj + tol)
        rows.append((x[0], x[1], u, maj, margin))
    return KernelBoundReport(tuple(rows), tol, passed)


def interior_lattice(width: float, height: float, count: int = 5) -> np.ndarray:
    """count x count points at (i a/(count+1), j b/(count+1))."""
    xs = width * np.arange(1, count + 1) / (count + 1)
    ys = height * np.arange(1, count + 1) / (count + 1)
    return np.array([(x, y) for x in xs for y in ys])
