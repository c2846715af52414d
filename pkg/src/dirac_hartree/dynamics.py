"""Time evolution of the Dirac-Hartree system.

Two integrators share the geometry adapters below:

* Strang splitting (default): half kick exp(-i V dt/2), exact free flow,
  half kick with the updated potential. Every substep is unitary.
* Picard iteration on the Duhamel form
  Psi(t) = K(t) Phi - i int_0^t K(t - t') V(Psi(t')) Psi(t') dt'
  with a composite trapezoid rule in time.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .dirichlet import DirichletBasis
from .fields import Grid2D, MixedState, SpinorField, density_values
from .poisson import dirichlet_potential, torus_potential
from .propagator import bounded_propagator_coefficients, free_propagator_symbol
from .reporting import config_hash, csv_header, fmt
from .spectral import apply_symbol, dirac_matrix_symbol, fft, ifft


class TorusGeometry:
    """Periodic box [-L, L)^2, spectral representation = unnormalized FFT."""

    name = "torus"

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self._r = grid.frequency_modulus()
        self._dirac = dirac_matrix_symbol(grid)
        self._parseval = grid.cell_area / grid.points_per_axis**2
        self._cache = {}

    def forward(self, values):
        return fft(values)

    def backward(self, spec):
        return ifft(spec)

    def propagate_spectral(self, spec, t: float):
        sym = self._cache.get(t)
        if sym is None:
            sym = free_propagator_symbol(self.grid, t)
            if len(self._cache) < 8:
                self._cache[t] = sym
        return apply_symbol(sym, spec)

    def free(self, values, t: float):
        return self.backward(self.propagate_spectral(self.forward(values), t))

    def potential(self, n):
        return torus_potential(n, self.grid)

    def kinetic(self, psi) -> float:
        hat = fft(psi)
        return float(np.real(np.vdot(hat, apply_symbol(self._dirac, hat))) * self._parseval)

    def field_energy(self, v) -> float:
        hat = fft(v)
        return float(np.sum(self._r * np.abs(hat) ** 2) * self._parseval)

    def hs_norm_sq(self, psi, s: float) -> float:
        hat = fft(psi)
        weight = (1.0 + self._r**2) ** s
        return float(np.sum(weight * np.sum(np.abs(hat) ** 2, axis=0)) * self._parseval)

    def mass(self, psi) -> float:
        return float(np.vdot(psi, psi).real * self.grid.cell_area)


class RectangleGeometry:
    """Dirichlet rectangle, spectral representation = eigencoefficients.

    The free flow is exact on the retained modes; with fewer modes than
    interior nodes per axis each free step also projects onto the basis.
    """

    name = "rectangle"

    def __init__(self, basis: DirichletBasis):
        if not basis.is_rectangle:
            raise ValueError("rectangle geometry needs a rectangle basis")
        self.basis = basis
        self.grid = basis.grid
        self._sqrt_mu = np.sqrt(basis.eigenvalues)

    def forward(self, values):
        return self.basis.forward(values)

    def backward(self, spec):
        return self.basis.inverse(spec)

    def propagate_spectral(self, spec, t: float):
        return bounded_propagator_coefficients(t, spec, self.basis.eigenvalues)

    def free(self, values, t: float):
        return self.backward(self.propagate_spectral(self.forward(values), t))

    def potential(self, n):
        return dirichlet_potential(n, self.basis)

    def kinetic(self, psi) -> float:
        c = self.forward(psi)
        return float(np.sum(2.0 * self._sqrt_mu * np.real(np.conj(c[0]) * c[1])))

    def field_energy(self, v) -> float:
        c = self.forward(v)
        return float(np.sum(self._sqrt_mu * np.abs(c) ** 2))

    def hs_norm_sq(self, psi, s: float) -> float:
        c = self.forward(psi)
        return float(np.sum(self.basis.eigenvalues**s * np.sum(np.abs(c) ** 2, axis=0)))

    def mass(self, psi) -> float:
        return float(np.vdot(psi, psi).real * self.grid.cell_area)


def geometry_for(state: MixedState, basis: Optional[DirichletBasis] = None):
    if isinstance(state.grid, Grid2D):
        return TorusGeometry(state.grid)
    if basis is None or basis.grid != state.grid:
        raise ValueError("a matching Dirichlet basis is required off the torus")
    return RectangleGeometry(basis)


# -- energy ------------------------------------------------------------------


def _energy(stack, weights, geometry, free_field=False) -> float:
    kinetic = sum(w * geometry.kinetic(psi) for w, psi in zip(weights, stack))
    if free_field:
        return float(kinetic)
    v = geometry.potential(density_values(stack, weights))
    return float(kinetic + geometry.field_energy(v))


def hartree_energy(state: MixedState, geometry) -> float:
    """E = sum_j w_j <H Psi_j, Psi_j> + || (-Laplacian)^(1/4) V ||^2.

    On the rectangle H is sigma_1 A^(1/2) and the field term is
    ||A^(1/4) V||^2; this bounded-domain functional is a derived
    diagnostic obtained by the same multiplier argument.
    """
    return _energy(state.stacked(), state.weights, geometry)


# -- Strang splitting --------------------------------------------------------


class StrangIntegrator:
    """Reusable Strang stepper; keeps V between steps (kicks leave n unchanged)."""

    def __init__(self, geometry, dt: float, weights, free_field=False, potential_shift=0.0):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.geometry = geometry
        self.dt = float(dt)
        self.weights = np.asarray(weights, dtype=float)
        self.free_field = free_field
        self.potential_shift = float(potential_shift)
        self._v = None

    def potential(self, stack):
        if self.free_field:
            v = np.zeros(stack.shape[2:])
        else:
            v = self.geometry.potential(density_values(stack, self.weights))
        return v + self.potential_shift

    def step(self, stack):
        if self._v is None:
            self._v = self.potential(stack)
        kick = np.exp(-0.5j * self.dt * self._v)
        stack = stack * kick
        stack = self.geometry.free(stack, self.dt)
        self._v = self.potential(stack)
        kick = np.exp(-0.5j * self.dt * self._v)
        return stack * kick


def strang_step(state: MixedState, dt: float, geometry, free_field=False, potential_shift=0.0) -> MixedState:
    """One Strang step of size dt."""
    integrator = StrangIntegrator(geometry, dt, state.weights, free_field, potential_shift)
    return MixedState.from_stacked(state.grid, integrator.step(state.stacked()), state.weights)


# -- Picard / Duhamel --------------------------------------------------------


DIVERGENCE_FACTOR = 1e6


@dataclass
class PicardConfig:
    max_iters: int = 50
    tolerance: float = 1e-10
    quadrature_substeps: int = 100
    s: float = 0.5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("Picard tolerance must be positive")
        if self.max_iters < 1 or self.quadrature_substeps < 1:
            raise ValueError("max_iters and quadrature_substeps must be >= 1")


@dataclass
class ContractionReport:
    T: float
    s: float
    distances: list
    ratios: list
    converged: bool
    iterations: int

    def contraction_constant(self, floor: float = 0.0) -> float:
        """Largest measured ratio d_{n+1}/d_n with d_{n+1} above ``floor``."""
        kept = [r for r, d in zip(self.ratios, self.distances[1:]) if d > floor]
        return max(kept) if kept else 0.0


class PicardDivergence(RuntimeError):
    def __init__(self, report: ContractionReport):
        super().__init__(f"Picard iteration did not converge within {report.iterations} iterations "
                         f"(ratios {['%.3g' % r for r in report.ratios]})")
        self.report = report


@dataclass
class PicardResult:
    times: np.ndarray
    trajectory: np.ndarray  # (nodes, J, 2, *grid)
    weights: np.ndarray
    grid: object
    report: ContractionReport

    def state_at(self, k: int) -> MixedState:
        return MixedState.from_stacked(self.grid, self.trajectory[k], self.weights)


def _hs_lambda_sup(diff, weights, geometry, s) -> float:
    best = 0.0
    for node in diff:
        total = sum(w * geometry.hs_norm_sq(psi, s) for w, psi in zip(weights, node))
        best = max(best, total)
    return float(np.sqrt(best))


def picard_solve(initial: MixedState, T: float, cfg: PicardConfig, geometry, free_field=False,
                 raise_on_failure=True) -> PicardResult:
    """Fixed-point iteration of the Duhamel map on uniform nodes in [0, T].

    Starts from Psi^0(t) = K(t) Phi and stops once the sup over nodes of the
    H^s(lambda) distance between iterates drops below ``cfg.tolerance``.
    Raises :class:`PicardDivergence` with the ratio history otherwise.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    q = cfg.quadrature_substeps
    times = np.linspace(0.0, T, q + 1)
    dt = T / q
    weights = initial.weights
    phi_hat = geometry.forward(initial.stacked())

    def evolve(offsets):
        # offsets[k] is the spectral increment added to phi at node k
        out = np.empty((q + 1,) + initial.stacked().shape, dtype=np.complex128)
        for k, t in enumerate(times):
            out[k] = geometry.backward(geometry.propagate_spectral(phi_hat + offsets[k], t))
        return out

    current = evolve(np.zeros((q + 1,) + phi_hat.shape, dtype=np.complex128))
    distances, ratios = [], []
    converged = False
    iterations = 0
    while iterations < cfg.max_iters:
        iterations += 1
        if free_field:
            g = np.zeros((q + 1,) + phi_hat.shape, dtype=np.complex128)
        else:
            g = np.empty((q + 1,) + phi_hat.shape, dtype=np.complex128)
            for k, t in enumerate(times):
                v = geometry.potential(density_values(current[k], weights))
                g[k] = geometry.propagate_spectral(geometry.forward(-1j * v * current[k]), -t)
        offsets = np.zeros_like(g)
        for k in range(1, q + 1):
            offsets[k] = offsets[k - 1] + 0.5 * dt * (g[k - 1] + g[k])
        new = evolve(offsets)
        d = _hs_lambda_sup(new - current, weights, geometry, cfg.s)
        if distances and distances[-1] > 0:
            ratios.append(d / distances[-1])
        distances.append(d)
        current = new
        if d < cfg.tolerance:
            converged = True
            break
        # iterates are running away; further iterations would overflow
        if not np.isfinite(d) or d > DIVERGENCE_FACTOR * max(distances[0], cfg.tolerance):
            break
    report = ContractionReport(float(T), cfg.s, distances, ratios, converged, iterations)
    if not converged and raise_on_failure:
        raise PicardDivergence(report)
    return PicardResult(times, current, weights, initial.grid, report)


# -- orchestration -----------------------------------------------------------


@dataclass
class EvolutionConfig:
    geometry: str = "torus"
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "strang"
    picard: PicardConfig = field(default_factory=PicardConfig)
    diagnostics_every: int = 10
    s: float = 0.5
    snapshot_times: tuple = ()

    def __post_init__(self):
        if isinstance(self.picard, dict):
            self.picard = PicardConfig(**self.picard)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T >= self.dt:
            raise ValueError("T must be at least dt")
        if self.scheme not in ("strang", "picard_duhamel"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.geometry not in ("torus", "rectangle"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.diagnostics_every < 1:
            raise ValueError("diagnostics_every must be >= 1")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))


@dataclass
class Diagnostics:
    t: float
    masses: np.ndarray
    energy: float
    hs_lambda: float


class NumericalAbort(RuntimeError):
    def __init__(self, message: str, last: Optional[Diagnostics]):
        super().__init__(message)
        self.last = last


@dataclass
class RunReport:
    config: dict
    diagnostics: list
    snapshots: dict = field(default_factory=dict)
    free_field: bool = False
    label: str = "E: Hamiltonian energy"

    @property
    def times(self):
        return np.array([d.t for d in self.diagnostics])

    @property
    def energies(self):
        return np.array([d.energy for d in self.diagnostics])

    @property
    def masses(self):
        return np.array([d.masses for d in self.diagnostics])

    @property
    def hs_lambda(self):
        return np.array([d.hs_lambda for d in self.diagnostics])

    def energy_drift(self) -> float:
        """max_t |E(t) - E(0)| / |E(0)|; absolute drift when E(0) = 0."""
        e = self.energies
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)

    def to_csv(self) -> str:
        chash = config_hash(self.config)
        j = len(self.diagnostics[0].masses)
        lines = csv_header(chash, {"energy": self.label, "free_field": self.free_field})
        lines.append("t," + ",".join(f"m_{i}" for i in range(j)) + ",E,Hs_lambda")
        for d in self.diagnostics:
            lines.append(",".join([fmt(d.t)] + [fmt(m) for m in d.masses] + [fmt(d.energy), fmt(d.hs_lambda)]))
        return "\n".join(lines) + "\n"


def _diagnose(t, stack, weights, geometry, s, free_field) -> Diagnostics:
    masses = np.array([geometry.mass(psi) for psi in stack])
    energy = _energy(stack, weights, geometry, free_field)
    hs = float(np.sqrt(sum(w * geometry.hs_norm_sq(psi, s) for w, psi in zip(weights, stack))))
    return Diagnostics(float(t), masses, energy, hs)


def _config_dict(cfg: EvolutionConfig) -> dict:
    d = asdict(cfg)
    d["snapshot_times"] = list(cfg.snapshot_times)
    return d


def run_evolution(initial: MixedState, cfg: EvolutionConfig, geometry, free_field=False,
                  potential_shift=0.0, provenance: Optional[dict] = None) -> RunReport:
    """Advance ``initial`` to cfg.T, sampling diagnostics every cfg.diagnostics_every steps.

    Aborts with :class:`NumericalAbort` on NaN/Inf or when an H^s norm
    exceeds 1e6 times its initial value.
    """
    weights = initial.weights
    stack = initial.stacked()
    config = provenance if provenance is not None else _config_dict(cfg)
    n_steps = cfg.steps
    dt = cfg.T / n_steps
    snap_steps = {int(round(t / dt)): t for t in cfg.snapshot_times}
    diags = [_diagnose(0.0, stack, weights, geometry, cfg.s, free_field)]
    initial_hs = np.array([np.sqrt(geometry.hs_norm_sq(psi, cfg.s)) for psi in stack])
    snapshots = {}
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = initial

    def guard(k, stack):
        if not np.all(np.isfinite(stack)):
            raise NumericalAbort(f"non-finite field at step {k}", diags[-1])
        hs = np.array([np.sqrt(geometry.hs_norm_sq(psi, cfg.s)) for psi in stack])
        if np.any(hs > 1e6 * np.maximum(initial_hs, 1e-300)):
            raise NumericalAbort(f"blow-up guard tripped at step {k}", diags[-1])

    if cfg.scheme == "strang":
        integrator = StrangIntegrator(geometry, dt, weights, free_field, potential_shift)
        for k in range(1, n_steps + 1):
            stack = integrator.step(stack)
            if not np.all(np.isfinite(stack)):
                raise NumericalAbort(f"non-finite field at step {k}", diags[-1])
            if k % cfg.diagnostics_every == 0 or k == n_steps:
                guard(k, stack)
                diags.append(_diagnose(k * dt, stack, weights, geometry, cfg.s, free_field))
            if k in snap_steps:
                snapshots[snap_steps[k]] = MixedState.from_stacked(initial.grid, stack, weights)
    else:
        pcfg = PicardConfig(cfg.picard.max_iters, cfg.picard.tolerance, n_steps, cfg.picard.s)
        result = picard_solve(initial, cfg.T, pcfg, geometry, free_field=free_field, raise_on_failure=False)
        if not result.report.converged:
            raise NumericalAbort("Picard iteration did not converge", diags[-1])
        for k in range(1, n_steps + 1):
            if k % cfg.diagnostics_every == 0 or k == n_steps:
                guard(k, result.trajectory[k])
                diags.append(_diagnose(k * dt, result.trajectory[k], weights, geometry, cfg.s, free_field))
            if k in snap_steps:
                snapshots[snap_steps[k]] = result.state_at(k)
    return RunReport(config, diags, snapshots, free_field,
                     "E: derived bounded-domain diagnostic" if geometry.name == "rectangle" else "E: Hamiltonian energy")


def contraction_probe(initial: MixedState, T_values, cfg: PicardConfig, geometry, noise_floor: float = 1e-12):
    """Run :func:`picard_solve` for each T; return per-T reports and the threshold T*.

    T* is the largest probed T such that every probed T' <= T converged with
    a measured contraction constant below 1.
    """
    reports = []
    for T in sorted(T_values):
        res = picard_solve(initial, T, cfg, geometry, raise_on_failure=False)
        reports.append(res.report)
    t_star = None
    for rep in reports:
        scale = rep.distances[0] if rep.distances else 0.0
        if rep.converged and rep.contraction_constant(noise_floor * max(scale, 1e-300)) < 1.0:
            t_star = rep.T
        else:
            break
    return reports, t_star
