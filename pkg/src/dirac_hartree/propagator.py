"""Free propagators and band projectors.

Torus: K(t) = cos(t|xi|) I - i sin(t|xi|) (sigma.xi)/|xi|, K(t) at xi = 0 is I.
Dirichlet box: K~(t) = cos(t sqrt(mu_p)) I - i sin(t sqrt(mu_p)) sigma_1 per mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DirichletBasis, EigenCoefficients, to_coefficients
from .fields import Grid2D, SpinorField
from .spectral import FourierMultiplier, apply_multiplier, dirac_matrix_symbol

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


def _unit_dirac_symbol(grid: Grid2D) -> np.ndarray:
    """(sigma . xi) / |xi|, set to 0 at xi = 0."""
    r = grid.frequency_modulus()
    inv = np.zeros_like(r)
    inv[r > 0] = 1.0 / r[r > 0]
    return dirac_matrix_symbol(grid) * inv


def free_propagator_symbol(grid: Grid2D, t: float) -> np.ndarray:
    r = grid.frequency_modulus()
    eye = np.eye(2)[:, :, None, None]
    return np.cos(t * r) * eye - 1j * np.sin(t * r) * _unit_dirac_symbol(grid)


@dataclass(frozen=True, eq=False)
class FreePropagator:
    grid: Grid2D
    t: float
    symbol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("propagation time must be finite")
        sym = free_propagator_symbol(self.grid, self.t)
        sym.flags.writeable = False
        object.__setattr__(self, "symbol", sym)

    def __call__(self, u: SpinorField) -> SpinorField:
        return apply_multiplier(FourierMultiplier(self.grid, self.symbol), u)


def apply_free_propagator(t: float, u: SpinorField) -> SpinorField:
    """K(t) u, the solution at time t of i d_t psi = H0 psi."""
    return FreePropagator(u.grid, t)(u)


def band_projector_symbol(grid: Grid2D, sign: int) -> np.ndarray:
    """1/2 (I +- (sigma.xi)/|xi|); equals I/2 at xi = 0."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    eye = np.eye(2)[:, :, None, None]
    return 0.5 * (eye + sign * _unit_dirac_symbol(grid))


def apply_band_projector(sign: int, u: SpinorField) -> SpinorField:
    return apply_multiplier(FourierMultiplier(u.grid, band_projector_symbol(u.grid, sign)), u)


def half_wave_symbol(grid: Grid2D, sign: int, t: float) -> np.ndarray:
    """Scalar symbol of K_sign(t) = exp(sign * i t |xi|)."""
    return np.exp(sign * 1j * t * grid.frequency_modulus())


def apply_half_wave(sign: int, t: float, u: SpinorField) -> SpinorField:
    return apply_multiplier(FourierMultiplier(u.grid, half_wave_symbol(u.grid, sign, t)), u)


def bounded_propagator_coefficients(t: float, coeffs: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """K~(t) acting on coefficient arrays of shape (..., 2, modes)."""
    w = t * np.sqrt(eigenvalues)
    c, s = np.cos(w), np.sin(w)
    up = c * coeffs[..., 0, :] - 1j * s * coeffs[..., 1, :]
    down = c * coeffs[..., 1, :] - 1j * s * coeffs[..., 0, :]
    return np.stack([up, down], axis=-2)


def apply_bounded_propagator(t: float, u, basis: DirichletBasis):
    """K~(t) in the Dirichlet eigenbasis.

    Accepts a grid field (returned as a grid field, band-limited to the
    basis) or :class:`EigenCoefficients`.
    """
    if isinstance(u, EigenCoefficients):
        if u.basis is not basis:
            raise ValueError("coefficients belong to a different basis")
        return EigenCoefficients(basis, bounded_propagator_coefficients(t, u.values, basis.eigenvalues))
    c = to_coefficients(u, basis)
    out = bounded_propagator_coefficients(t, c.values, basis.eigenvalues)
    return SpinorField(u.grid, basis.inverse(out))
