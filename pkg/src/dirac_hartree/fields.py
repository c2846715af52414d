"""Grids, spinor fields, mixed states and Pauli algebra.

Every other module works with the types defined here. Fields are immutable:
the value arrays are copied on construction and flagged read-only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

DUMP_MAGIC = b"DHL1"


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on the torus [-L, L)^2."""

    half_length: float
    points_per_axis: int

    ndim = 2

    def __post_init__(self):
        n = int(self.points_per_axis)
        if n < 8 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        if not (np.isfinite(self.half_length) and self.half_length > 0):
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis, self.points_per_axis)

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def axis(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    def mesh(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def wavenumbers(self) -> np.ndarray:
        """Lattice frequencies pi*k/L in FFT order, k = -N/2 .. N/2-1."""
        n = self.points_per_axis
        return (np.pi / self.half_length) * np.fft.fftfreq(n, d=1.0 / n)

    def frequency_mesh(self):
        k = self.wavenumbers()
        return np.meshgrid(k, k, indexing="ij")

    def frequency_modulus(self) -> np.ndarray:
        k1, k2 = self.frequency_mesh()
        return np.hypot(k1, k2)


@dataclass(frozen=True)
class RectangleGrid:
    """Interior nodes of the uniform lattice on [0, a] x [0, b].

    The lattice has ``intervals + 1`` nodes per axis including the boundary;
    only the ``intervals - 1`` interior nodes are stored since Dirichlet data
    vanish on the boundary.
    """

    width: float
    height: float
    intervals: int

    ndim = 2

    def __post_init__(self):
        if self.intervals < 4:
            raise ValueError("need at least 4 intervals per axis")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("rectangle sides must be positive")

    @property
    def spacing(self) -> tuple:
        return (self.width / self.intervals, self.height / self.intervals)

    @property
    def shape(self) -> tuple:
        return (self.intervals - 1, self.intervals - 1)

    @property
    def cell_area(self) -> float:
        hx, hy = self.spacing
        return hx * hy

    def axes(self):
        i = np.arange(1, self.intervals)
        hx, hy = self.spacing
        return i * hx, i * hy

    def mesh(self):
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True)
class IntervalGrid:
    """Interior nodes of the uniform lattice on (0, length)."""

    intervals: int
    length: float = 1.0

    ndim = 1

    def __post_init__(self):
        if self.intervals < 4:
            raise ValueError("need at least 4 intervals")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.intervals

    @property
    def shape(self) -> tuple:
        return (self.intervals - 1,)

    @property
    def cell_area(self) -> float:
        return self.spacing

    def axis(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.intervals)

    def mesh(self):
        return (self.axis(),)


Grid = Union[Grid2D, RectangleGrid, IntervalGrid]


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two-component complex field (psi_plus, psi_minus) sampled on a grid.

    ``values`` has shape ``(2, *grid.shape)``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values, np.complex128)
        expected = (2,) + tuple(self.grid.shape)
        if values.shape != expected:
            raise ValueError(f"spinor values must have shape {expected}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("spinor field contains NaN or Inf")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpinorField":
        return cls(grid, np.zeros((2,) + tuple(grid.shape), dtype=np.complex128))

    @classmethod
    def from_components(cls, grid: Grid, upper, lower) -> "SpinorField":
        shape = tuple(grid.shape)
        return cls(grid, np.stack([np.broadcast_to(upper, shape), np.broadcast_to(lower, shape)]))

    @property
    def upper(self) -> np.ndarray:
        return self.values[0]

    @property
    def lower(self) -> np.ndarray:
        return self.values[1]

    def _check(self, other: "SpinorField"):
        if not isinstance(other, SpinorField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("spinor fields live on different grids")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpinorField(self.grid, self.values + other.values)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpinorField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        if isinstance(scalar, SpinorField):
            return NotImplemented
        return SpinorField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpinorField(self.grid, -self.values)

    def norm(self) -> float:
        """L2 norm by Riemann sum."""
        return float(np.sqrt(inner_product(self, self).real))


@dataclass(frozen=True, eq=False)
class MixedState:
    """Density matrix sum_j w_j |Psi_j><Psi_j| with fixed positive weights."""

    states: tuple
    weights: np.ndarray

    def __post_init__(self):
        states = tuple(self.states)
        weights = _frozen(np.atleast_1d(self.weights), np.float64)
        if not states:
            raise ValueError("a mixed state needs at least one pure state")
        if weights.shape != (len(states),):
            raise ValueError("one weight per state is required")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be positive")
        grid = states[0].grid
        for psi in states[1:]:
            if psi.grid != grid:
                raise ValueError("all states of a mixture must share one grid")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self):
        return len(self.states)

    def stacked(self) -> np.ndarray:
        """Values as a writable array of shape (J, 2, *grid.shape)."""
        return np.stack([psi.values for psi in self.states])

    @classmethod
    def from_stacked(cls, grid: Grid, values: np.ndarray, weights) -> "MixedState":
        return cls(tuple(SpinorField(grid, v) for v in values), weights)

    @classmethod
    def pure(cls, psi: SpinorField, weight: float = 1.0) -> "MixedState":
        return cls((psi,), [weight])

    def with_weights(self, weights) -> "MixedState":
        return MixedState(self.states, weights)

    def masses(self) -> np.ndarray:
        return np.array([inner_product(psi, psi).real for psi in self.states])


@dataclass(frozen=True, eq=False)
class DensityField:
    """Real scalar field n(x).

    Densities produced by :func:`density` are nonnegative. Signed inputs
    (charge fluctuations) are accepted by the Poisson solvers, so
    nonnegativity is checked where it is a precondition rather than here.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if np.iscomplexobj(values):
            raise ValueError("density must be real")
        values = _frozen(np.broadcast_to(values, tuple(self.grid.shape)), np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("density contains NaN or Inf")
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_area))


def density(state: MixedState) -> DensityField:
    """n(x) = sum_j w_j (|psi_j^+|^2 + |psi_j^-|^2)."""
    return DensityField(state.grid, density_values(state.stacked(), state.weights))


def density_values(stack: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Array form of :func:`density` for a (J, 2, ...) stack; fixed summation order."""
    n = np.zeros(stack.shape[2:])
    for w, psi in zip(weights, stack):
        n += w * (psi[0].real**2 + psi[0].imag**2 + psi[1].real**2 + psi[1].imag**2)
    return n


def pauli_apply(which: int, field: SpinorField) -> SpinorField:
    """Apply sigma_1 (which=1) or sigma_2 (which=2) pointwise."""
    a, b = field.values
    if which == 1:
        out = np.stack([b, a])
    elif which == 2:
        out = np.stack([-1j * b, 1j * a])
    else:
        raise ValueError(f"only sigma_1 and sigma_2 are defined, got {which}")
    return SpinorField(field.grid, out)


def inner_product(u: SpinorField, v: SpinorField) -> complex:
    """L2 pairing sum_x <u(x), v(x)> dA, conjugate-linear in ``u``."""
    if u.grid != v.grid:
        raise ValueError("inner product of fields on different grids")
    return complex(np.vdot(u.values, v.values) * u.grid.cell_area)


# -- binary field dumps ------------------------------------------------------


def _dump_header(grid: Grid) -> tuple:
    if isinstance(grid, Grid2D):
        return grid.points_per_axis, 2, grid.half_length
    if isinstance(grid, IntervalGrid):
        return grid.intervals - 1, 1, grid.length
    if isinstance(grid, RectangleGrid):
        if grid.width != grid.height:
            raise ValueError("the dump header stores one length; only square rectangles can be dumped")
        return grid.intervals - 1, 2, grid.width
    raise TypeError(f"unsupported grid {grid!r}")


def write_field(target: Union[str, Path, BinaryIO], field: SpinorField) -> None:
    """Write ``field`` in the DHL1 little-endian dump format."""
    n, dim, length = _dump_header(field.grid)
    body = np.empty(field.values.shape[1:] + (4,), dtype="<f8")
    body[..., 0] = field.values[0].real
    body[..., 1] = field.values[0].imag
    body[..., 2] = field.values[1].real
    body[..., 3] = field.values[1].imag
    payload = DUMP_MAGIC + struct.pack("<IId", n, dim, length) + body.tobytes(order="C")
    if hasattr(target, "write"):
        target.write(payload)
    else:
        Path(target).write_bytes(payload)


def read_field(source: Union[str, Path, BinaryIO], geometry: str = "auto") -> SpinorField:
    """Read a DHL1 dump.

    Two-dimensional dumps are read as torus fields unless ``geometry`` is
    ``"rectangle"`` (square [0, L]^2 interior nodes).
    """
    raw = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    if raw[:4] != DUMP_MAGIC:
        raise ValueError("not a DHL1 field dump")
    n, dim, length = struct.unpack("<IId", raw[4:20])
    if dim == 1:
        grid: Grid = IntervalGrid(n + 1, length)
    elif dim == 2 and geometry in ("auto", "torus"):
        grid = Grid2D(length, n)
    elif dim == 2 and geometry == "rectangle":
        grid = RectangleGrid(length, length, n + 1)
    else:
        raise ValueError(f"cannot interpret dim={dim} dump as {geometry!r}")
    body = np.frombuffer(raw[20:], dtype="<f8")
    expected = 4 * int(np.prod(grid.shape))
    if body.size != expected:
        raise ValueError(f"dump body has {body.size} doubles, expected {expected}")
    body = body.reshape(tuple(grid.shape) + (4,))
    values = np.stack([body[..., 0] + 1j * body[..., 1], body[..., 2] + 1j * body[..., 3]])
    return SpinorField(grid, values)


def plane_wave(grid: Grid2D, wavevector: Sequence[float], spinor: Sequence[complex], mass: float = 1.0) -> SpinorField:
    """exp(i k.x) times a constant spinor, normalized to the given mass."""
    x1, x2 = grid.mesh()
    phase = np.exp(1j * (wavevector[0] * x1 + wavevector[1] * x2))
    spinor = np.asarray(spinor, dtype=np.complex128)
    spinor = spinor / np.linalg.norm(spinor)
    area = (2.0 * grid.half_length) ** 2
    scale = np.sqrt(mass / area)
    return SpinorField(grid, scale * spinor[:, None, None] * phase[None])


def gaussian_packet(grid, center, width, momentum=(0.0, 0.0), spinor=(1.0, 0.0), amplitude=1.0) -> SpinorField:
    """Gaussian envelope exp(-|x-c|^2 / (2 w^2)) with a plane-wave carrier."""
    x1, x2 = grid.mesh()
    r2 = (x1 - center[0]) ** 2 + (x2 - center[1]) ** 2
    env = amplitude * np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * (momentum[0] * x1 + momentum[1] * x2))
    spinor = np.asarray(spinor, dtype=np.complex128)
    return SpinorField(grid, spinor[:, None, None] * env[None])
