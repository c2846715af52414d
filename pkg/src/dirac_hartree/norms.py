"""Sobolev, Besov and mixed-state norms on the periodic grid.

Grid L^p norms are power sums over nodes (the discrete proxy; sup norms
between nodes are not resolved). The spinor modulus at a point is the
Euclidean norm in C^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .fields import Grid2D, MixedState, SpinorField
from .spectral import DyadicPartition, fft, ifft


def lp_norm(values: np.ndarray, cell_area: float, p: float) -> float:
    """L^p norm of a spinor array (2, ...) or scalar array."""
    values = np.asarray(values)
    mod = np.sqrt(np.sum(np.abs(values) ** 2, axis=0)) if values.ndim == 3 else np.abs(values)
    if np.isinf(p):
        return float(np.max(mod))
    return float((np.sum(mod**p) * cell_area) ** (1.0 / p))


def sobolev_norm(u: SpinorField, s: float) -> float:
    """Inhomogeneous H^s norm with multiplier (1 + |xi|^2)^(s/2)."""
    grid = u.grid
    hat = fft(u.values)
    weight = (1.0 + grid.frequency_modulus() ** 2) ** s
    total = np.sum(weight * np.sum(np.abs(hat) ** 2, axis=0))
    return float(np.sqrt(total * grid.cell_area / grid.points_per_axis**2))


def homogeneous_sobolev_sq(values: np.ndarray, grid: Grid2D, s: float) -> float:
    """||u||^2 with symbol |xi|^s summed over all leading axes; zero mode dropped."""
    hat = fft(values)
    r = grid.frequency_modulus()
    weight = np.zeros_like(r)
    weight[r > 0] = r[r > 0] ** (2.0 * s)
    return float(np.sum(weight * np.abs(hat) ** 2) * grid.cell_area / grid.points_per_axis**2)


def _combine(pieces, s: float, r: float) -> float:
    low, rest = pieces[0], np.asarray(pieces[1:], dtype=float)
    if rest.size == 0:
        return float(low)
    k = np.arange(1, rest.size + 1)
    scaled = 2.0 ** (s * k) * rest
    if np.isinf(r):
        return float(low + np.max(scaled))
    return float(low + np.sum(scaled**r) ** (1.0 / r))


def besov_from_hat(hat: np.ndarray, grid: Grid2D, s: float, p: float, r: float, blocks) -> float:
    """Besov norm of one field given its FFT and precomputed block symbols."""
    pieces = [lp_norm(ifft(hat * phi), grid.cell_area, p) for phi in blocks]
    return _combine(pieces, s, r)


def besov_norm(u: SpinorField, s: float, p: float, r: float, partition: DyadicPartition = None) -> float:
    """||phi_0 * u||_p + (sum_{k>=1} 2^(skr) ||phi_k * u||_p^r)^(1/r)."""
    if not (p >= 1 and r >= 1):
        raise ValueError("Besov exponents must satisfy p, r >= 1")
    partition = partition or DyadicPartition()
    return besov_from_hat(fft(u.values), u.grid, s, p, r, partition.blocks(u.grid))


@dataclass(frozen=True)
class NormSpec:
    """Base norm for :func:`weighted_norm`: kind in {"l2", "hs", "besov"}."""

    kind: str
    s: float = 0.0
    p: float = 2.0
    r: float = 2.0

    def base_norm(self, u: SpinorField, partition: DyadicPartition = None) -> float:
        if self.kind == "l2":
            return u.norm()
        if self.kind == "hs":
            return sobolev_norm(u, self.s)
        if self.kind == "besov":
            return besov_norm(u, self.s, self.p, self.r, partition)
        raise ValueError(f"unknown norm kind {self.kind!r}")


def weighted_norm(state: MixedState, spec: NormSpec, partition: DyadicPartition = None) -> float:
    """sqrt(sum_j w_j ||Phi_j||^2) for the base norm in ``spec``."""
    if spec.kind not in ("l2", "hs", "besov"):
        raise ValueError(f"unknown norm kind {spec.kind!r}")
    total = 0.0
    for w, psi in zip(state.weights, state.states):
        total += w * spec.base_norm(psi, partition) ** 2
    return float(np.sqrt(total))


@dataclass(frozen=True)
class AdmissibleTriple:
    """Wave-admissible exponents: 2/q = 1/2 - 1/r and 2s = 3(1/2 - 1/r)."""

    q: float
    r: float
    s: float

    def __post_init__(self):
        if not (2 <= self.q <= np.inf and 2 <= self.r <= np.inf):
            raise ValueError("need 2 <= q, r <= inf")
        gap = 0.5 - 1.0 / self.r
        if abs(2.0 / self.q - gap) > 1e-12 or abs(2.0 * self.s - 3.0 * gap) > 1e-12:
            raise ValueError(f"({self.q}, {self.r}, {self.s}) is not admissible")

    @classmethod
    def from_r(cls, r: float) -> "AdmissibleTriple":
        gap = 0.5 - 1.0 / r
        q = np.inf if gap == 0 else 2.0 / gap
        return cls(q, r, 1.5 * gap)


def time_lq(values: np.ndarray, times: np.ndarray, q: float) -> float:
    """L^q over [t_0, t_end] by the trapezoid rule on the q-th power."""
    values = np.asarray(values, dtype=float)
    if np.isinf(q):
        return float(np.max(values))
    return float(trapezoid(values**q, times) ** (1.0 / q))


def mixed_besov_series(stacks, weights, grid: Grid2D, s, p, r, partition=None) -> np.ndarray:
    """t -> ||Psi(t)||_{B^s_{p,r}(lambda)} for a sequence of (J, 2, N, N) stacks."""
    blocks = (partition or DyadicPartition()).blocks(grid)
    out = []
    for stack in stacks:
        total = sum(w * besov_from_hat(fft(psi), grid, s, p, r, blocks) ** 2 for w, psi in zip(weights, stack))
        out.append(np.sqrt(total))
    return np.array(out)


def xt_norm(times, stacks, weights, grid: Grid2D, s: float, r: float) -> float:
    """sup_t ||Psi||_{H^s(lambda)} + ||Psi||_{L^q_T B^{s-sigma}_{r,2}(lambda)}.

    (q, sigma) follow from r by the admissible relation; r must exceed
    1/(4s - 3/2), which requires s > 3/8.
    """
    if not s > 3.0 / 8.0:
        raise ValueError("the X_T norm is defined for s > 3/8")
    if not r > max(2.0, 1.0 / (4.0 * s - 1.5)):
        raise ValueError(f"need r > 1/(4s - 3/2) = {1.0 / (4.0 * s - 1.5):.4g}")
    triple = AdmissibleTriple.from_r(r)
    weights = np.asarray(weights)
    sup = 0.0
    for stack in stacks:
        hs = sum(w * sobolev_norm(SpinorField(grid, psi), s) ** 2 for w, psi in zip(weights, stack))
        sup = max(sup, np.sqrt(hs))
    series = mixed_besov_series(stacks, weights, grid, s - triple.s, r, 2.0)
    return float(sup + time_lq(series, np.asarray(times), triple.q))
