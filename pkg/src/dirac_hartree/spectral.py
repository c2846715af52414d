"""Fourier multipliers on the periodic grid.

FFT convention: forward transform unnormalized, inverse divided by N^2
(``scipy.fft`` defaults). Symbols are stored either as scalar arrays of
shape ``(N, N)`` or as matrix arrays of shape ``(2, 2, N, N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .fields import Grid2D, SpinorField

AXES = (-2, -1)


def fft(values: np.ndarray) -> np.ndarray:
    return sfft.fft2(values, axes=AXES)


def ifft(values: np.ndarray) -> np.ndarray:
    return sfft.ifft2(values, axes=AXES)


def apply_symbol(symbol: np.ndarray, hat: np.ndarray) -> np.ndarray:
    """Multiply spinor Fourier data ``hat`` (..., 2, N, N) by a symbol."""
    if symbol.ndim == 2:
        return symbol * hat
    up = symbol[0, 0] * hat[..., 0, :, :] + symbol[0, 1] * hat[..., 1, :, :]
    down = symbol[1, 0] * hat[..., 0, :, :] + symbol[1, 1] * hat[..., 1, :, :]
    return np.stack([up, down], axis=-3)


@dataclass(frozen=True, eq=False)
class FourierMultiplier:
    """A (possibly matrix-valued) function of the lattice frequency."""

    grid: Grid2D
    symbol: np.ndarray

    def __post_init__(self):
        sym = np.array(self.symbol, dtype=np.complex128)
        n = self.grid.points_per_axis
        if sym.shape not in ((n, n), (2, 2, n, n)):
            raise ValueError(f"symbol shape {sym.shape} does not match grid")
        if not np.all(np.isfinite(sym)):
            raise ValueError("symbol must be finite at every lattice frequency")
        sym.flags.writeable = False
        object.__setattr__(self, "symbol", sym)

    @property
    def is_scalar(self) -> bool:
        return self.symbol.ndim == 2

    def matrix(self) -> np.ndarray:
        if self.is_scalar:
            eye = np.eye(2)[:, :, None, None]
            return eye * self.symbol[None, None]
        return self.symbol

    def __matmul__(self, other: "FourierMultiplier") -> "FourierMultiplier":
        """Composition: (self @ other) applies ``other`` first."""
        if other.grid != self.grid:
            raise ValueError("multipliers on different grids")
        if self.is_scalar and other.is_scalar:
            return FourierMultiplier(self.grid, self.symbol * other.symbol)
        a, b = self.matrix(), other.matrix()
        return FourierMultiplier(self.grid, np.einsum("ik...,kj...->ij...", a, b))

    def __call__(self, u: SpinorField) -> SpinorField:
        return apply_multiplier(self, u)


def apply_multiplier(m: FourierMultiplier, u: SpinorField) -> SpinorField:
    if m.grid != u.grid:
        raise ValueError("multiplier and field live on different grids")
    return SpinorField(u.grid, ifft(apply_symbol(m.symbol, fft(u.values))))


def fractional_symbol(grid: Grid2D, s: float, zero_mode: str = "zero") -> np.ndarray:
    if zero_mode not in ("zero", "keep"):
        raise ValueError(f"zero_mode must be 'zero' or 'keep', got {zero_mode!r}")
    if s < 0 and zero_mode == "keep":
        raise ValueError("(-Laplacian)^s with s < 0 is singular at xi = 0; use zero_mode='zero'")
    r = grid.frequency_modulus()
    sym = np.zeros_like(r)
    nz = r > 0
    sym[nz] = r[nz] ** (2.0 * s)
    if zero_mode == "keep" and s == 0:
        sym[~nz] = 1.0
    return sym


def fractional_laplacian(s: float, u: SpinorField, zero_mode: str = "zero") -> SpinorField:
    """(-Laplacian)^s with symbol |xi|^(2s).

    With ``zero_mode="zero"`` the xi = 0 mode of the output is removed
    (always the case for s < 0).
    """
    return apply_multiplier(FourierMultiplier(u.grid, fractional_symbol(u.grid, s, zero_mode)), u)


def dirac_matrix_symbol(grid: Grid2D) -> np.ndarray:
    """sigma . xi = xi_1 sigma_1 + xi_2 sigma_2."""
    k1, k2 = grid.frequency_mesh()
    zero = np.zeros_like(k1)
    return np.array([[zero, k1 - 1j * k2], [k1 + 1j * k2, zero]])


def dirac_symbol(u: SpinorField) -> SpinorField:
    """Free Dirac Hamiltonian H0 = -i sigma . grad applied spectrally."""
    return apply_multiplier(FourierMultiplier(u.grid, dirac_matrix_symbol(u.grid)), u)


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class DyadicPartition:
    """Smooth Littlewood-Paley partition of unity.

    The radial cutoff is 1 on [0, 1], 0 on [2, inf) and interpolates with
    the C-infinity ratio g(2-r) / (g(2-r) + g(r-1)), g(t) = exp(-1/t).
    Block 0 is the cutoff itself; block k >= 1 is cutoff(r/2^k) - cutoff(r/2^(k-1)).
    """

    def cutoff(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        a, b = _bump(2.0 - r), _bump(r - 1.0)
        out = np.where(r <= 1.0, 1.0, 0.0)
        mid = (r > 1.0) & (r < 2.0)
        out[mid] = a[mid] / (a[mid] + b[mid])
        return out

    def block(self, k: int, r) -> np.ndarray:
        if k < 0:
            raise ValueError("block index must be >= 0")
        if k == 0:
            return self.cutoff(r)
        r = np.asarray(r, dtype=float)
        return self.cutoff(r / 2.0**k) - self.cutoff(r / 2.0 ** (k - 1))

    def max_block(self, rmax: float) -> int:
        """Largest k whose block meets the disc of radius ``rmax``."""
        if rmax <= 1.0:
            return 0
        return int(np.ceil(np.log2(rmax)))

    def blocks(self, grid: Grid2D) -> list:
        r = grid.frequency_modulus()
        return [self.block(k, r) for k in range(self.max_block(float(r.max())) + 1)]


def lp_block(k: int, partition: DyadicPartition, u: SpinorField) -> SpinorField:
    """Littlewood-Paley piece phi_k * u, realized as a Fourier cutoff."""
    sym = partition.block(k, u.grid.frequency_modulus())
    return apply_multiplier(FourierMultiplier(u.grid, sym), u)
