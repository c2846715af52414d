"""Analytic Dirichlet eigenbases, coefficient transforms and H^s_A norms.

Rectangle [0, a] x [0, b]: e_pq = 2/sqrt(ab) sin(p pi x/a) sin(q pi y/b),
mu_pq = (p pi/a)^2 + (q pi/b)^2. Interval (0, l): e_p = sqrt(2/l) sin(p pi x/l),
mu_p = (p pi/l)^2. Quadrature on the interior lattice nodes is a discrete
sine transform and is exact for modes p < intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.fft as sfft

from .fields import IntervalGrid, MixedState, RectangleGrid, SpinorField


def _sine_table(modes: int, nodes: np.ndarray, length: float) -> np.ndarray:
    p = np.arange(1, modes + 1)[:, None]
    return np.sqrt(2.0 / length) * np.sin(np.pi * p * nodes[None, :] / length)


class DirichletBasis:
    """Eigenpairs of the Dirichlet Laplacian with forward/inverse transforms.

    Coefficients are stored flattened, ordered by ascending eigenvalue with
    ties broken lexicographically on the mode indices.
    """

    def __init__(self, grid: Union[RectangleGrid, IntervalGrid], modes: int):
        modes = int(modes)
        if modes < 1:
            raise ValueError("need at least one mode per axis")
        if modes > grid.intervals - 1:
            raise ValueError(f"at most {grid.intervals - 1} modes are resolved by {grid.intervals} intervals")
        self.grid = grid
        self.modes = modes
        p = np.arange(1, modes + 1)
        if isinstance(grid, RectangleGrid):
            x, y = grid.axes()
            self._tables = (_sine_table(modes, x, grid.width), _sine_table(modes, y, grid.height))
            pp, qq = np.meshgrid(p, p, indexing="ij")
            pp, qq = pp.ravel(), qq.ravel()
            mu = np.pi**2 * (pp**2 / grid.width**2 + qq**2 / grid.height**2)
            order = np.lexsort((qq, pp, mu))
            self.indices = np.stack([pp[order], qq[order]], axis=1)
            self._flat = (pp[order] - 1) * modes + (qq[order] - 1)
        elif isinstance(grid, IntervalGrid):
            self._tables = (_sine_table(modes, grid.axis(), grid.length),)
            mu = (np.pi * p / grid.length) ** 2
            order = np.arange(modes)
            self.indices = p[:, None]
            self._flat = order
        else:
            raise TypeError(f"no Dirichlet basis for grid {grid!r}")
        self.eigenvalues = mu[order]
        for arr in (self.indices, self._flat, self.eigenvalues):
            arr.flags.writeable = False

    @classmethod
    def rectangle(cls, width: float, height: float, modes: int, intervals: int) -> "DirichletBasis":
        return cls(RectangleGrid(width, height, intervals), modes)

    @classmethod
    def interval(cls, modes: int, intervals: int, length: float = 1.0) -> "DirichletBasis":
        return cls(IntervalGrid(intervals, length), modes)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def is_rectangle(self) -> bool:
        return isinstance(self.grid, RectangleGrid)

    def index_of(self, *mode) -> int:
        hits = np.flatnonzero(np.all(self.indices == np.asarray(mode), axis=1))
        if hits.size != 1:
            raise KeyError(f"mode {mode} not retained")
        return int(hits[0])

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Grid values (..., *grid.shape) -> coefficients (..., size)."""
        values = np.asarray(values)
        if self.is_rectangle:
            tx, ty = self._tables
            c = np.einsum("pi,...ij,qj->...pq", tx, values, ty) * self.grid.cell_area
            c = c.reshape(c.shape[:-2] + (self.modes * self.modes,))
        else:
            (tx,) = self._tables
            c = np.einsum("pi,...i->...p", tx, values) * self.grid.cell_area
        return c[..., self._flat]

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients (..., size) -> grid values (..., *grid.shape)."""
        coeffs = np.asarray(coeffs)
        if self.is_rectangle:
            tx, ty = self._tables
            full = np.zeros(coeffs.shape[:-1] + (self.modes * self.modes,), dtype=coeffs.dtype)
            full[..., self._flat] = coeffs
            full = full.reshape(coeffs.shape[:-1] + (self.modes, self.modes))
            return np.einsum("pi,...pq,qj->...ij", tx, full, ty)
        (tx,) = self._tables
        return np.einsum("pi,...p->...i", tx, coeffs)

    def eigenfunction(self, *mode) -> np.ndarray:
        c = np.zeros(self.size)
        c[self.index_of(*mode)] = 1.0
        return self.inverse(c)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Orthogonal projection of grid values onto the retained modes."""
        return self.inverse(self.forward(values))

    def evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the expansion at arbitrary points of shape (m, ndim)."""
        coeffs = np.asarray(coeffs)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        p = np.arange(1, self.modes + 1)[:, None]
        if self.is_rectangle:
            a, b = self.grid.width, self.grid.height
            ex = np.sqrt(2.0 / a) * np.sin(np.pi * p * points[None, :, 0] / a)
            ey = np.sqrt(2.0 / b) * np.sin(np.pi * p * points[None, :, 1] / b)
            full = np.zeros(self.modes * self.modes, dtype=coeffs.dtype)
            full[self._flat] = coeffs
            return np.einsum("pq,pm,qm->m", full.reshape(self.modes, self.modes), ex, ey)
        length = self.grid.length
        ex = np.sqrt(2.0 / length) * np.sin(np.pi * p * points[None, :, 0] / length)
        return coeffs @ ex


@dataclass(frozen=True, eq=False)
class EigenCoefficients:
    """Spinor coefficients, shape (2, basis.size)."""

    basis: DirichletBasis
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (2, self.basis.size):
            raise ValueError(f"expected coefficient shape (2, {self.basis.size}), got {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def to_coefficients(u: SpinorField, basis: DirichletBasis) -> EigenCoefficients:
    if u.grid != basis.grid:
        raise ValueError("field is not sampled on the basis quadrature grid")
    return EigenCoefficients(basis, basis.forward(u.values))


def from_coefficients(c: EigenCoefficients) -> SpinorField:
    return SpinorField(c.basis.grid, c.basis.inverse(c.values))


def hs_a_norm(u: Union[SpinorField, EigenCoefficients], s: float, basis: DirichletBasis = None) -> float:
    """sqrt(sum_p mu_p^s |<u, e_p>|^2) over both spinor components.

    Negative ``s`` is accepted as a diagnostic (dual norms).
    """
    if isinstance(u, SpinorField):
        if basis is None:
            raise ValueError("a basis is required to expand a grid field")
        u = to_coefficients(u, basis)
    mu = u.basis.eigenvalues
    return float(np.sqrt(np.sum(mu**s * np.sum(np.abs(u.values) ** 2, axis=0))))


def mixed_hs_a_norm(state: MixedState, s: float, basis: DirichletBasis) -> float:
    """sqrt(sum_j w_j ||Psi_j||^2_{H^s_A})."""
    total = 0.0
    for w, psi in zip(state.weights, state.states):
        total += w * hs_a_norm(psi, s, basis) ** 2
    return float(np.sqrt(total))


def scalar_hs_a_norm(values: np.ndarray, s: float, basis: DirichletBasis) -> float:
    """H^s_A norm of a scalar grid function."""
    c = basis.forward(values)
    return float(np.sqrt(np.sum(basis.eigenvalues**s * np.abs(c) ** 2)))


# -- the sin^2 counterexample on (0, 1) --------------------------------------


def square_sine_coefficients(pmax: int, points: int = 2**21) -> np.ndarray:
    """<sin^2(pi x), sqrt(2) sin(p pi x)> for p = 1..pmax by DST-I quadrature.

    ``points`` intervals are used; aliasing error of mode p is of relative
    size (p / 2 points)^3.
    """
    if pmax >= points:
        raise ValueError("quadrature grid too coarse for the requested modes")
    x = np.arange(1, points) / points
    f = np.sin(np.pi * x) ** 2
    # scipy's DST-I: y_k = 2 sum_n f_n sin(pi (k+1)(n+1) / points)
    y = sfft.dst(f, type=1)
    return math.sqrt(2.0) * y[:pmax] / (2.0 * points)


def square_sine_coefficients_exact(p) -> np.ndarray:
    """Closed form: -4 sqrt(2) / (pi p (p^2 - 4)) for odd p, 0 for even p."""
    p = np.asarray(p, dtype=float)
    odd = p % 2 == 1
    out = np.zeros_like(p)
    out[odd] = -4.0 * math.sqrt(2.0) / (np.pi * p[odd] * (p[odd] ** 2 - 4.0))
    return out


@dataclass(frozen=True)
class DivergenceTable:
    """Partial sums S_N(s) = sum_{p <= N} (p pi)^(2s) c_p^2."""

    rows: tuple  # (N, s, S_N)
    coefficients: np.ndarray

    def value(self, n: int, s: float) -> float:
        for row in self.rows:
            if row[0] == n and row[1] == s:
                return row[2]
        raise KeyError((n, s))

    def to_csv(self) -> str:
        from .reporting import fmt

        lines = ["N,s,S_N"]
        lines += [f"{n},{fmt(s)},{fmt(v)}" for n, s, v in self.rows]
        return "\n".join(lines) + "\n"


def counterexample_divergence(s_values: Sequence[float], n_values: Sequence[int], points: int = 2**21) -> DivergenceTable:
    """Partial H^s_A sums of u^2, u = sin(pi x) on (0, 1).

    Coefficients come from quadrature; sums use compensated summation since
    S_N(5/2) only grows like log N.
    """
    n_values = sorted(int(n) for n in n_values)
    c = square_sine_coefficients(n_values[-1], points)
    p = np.arange(1, n_values[-1] + 1, dtype=float)
    rows = []
    for s in s_values:
        terms = (p * np.pi) ** (2.0 * s) * c**2
        for n in n_values:
            rows.append((n, float(s), math.fsum(terms[:n])))
    return DivergenceTable(tuple(rows), c)


def decade_increments(table: DivergenceTable, s: float) -> list:
    """S_N(s) - S_{N/10}(s) for consecutive tabulated N that differ by a factor 10."""
    ns = sorted({row[0] for row in table.rows if row[1] == s})
    return [(n, table.value(n, s) - table.value(n // 10, s)) for n in ns if n % 10 == 0 and n // 10 in ns]


def coefficient_slope(coefficients: np.ndarray, pmin: int = 100, pmax: int = 10_000) -> float:
    """Least-squares slope of log|c_p| against log p over odd p in [pmin, pmax]."""
    p = np.arange(1, coefficients.size + 1)
    keep = (p % 2 == 1) & (p >= pmin) & (p <= pmax)
    return float(np.polyfit(np.log(p[keep]), np.log(np.abs(coefficients[keep])), 1)[0])
