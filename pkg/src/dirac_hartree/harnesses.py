"""Empirical ratio tests for the functional inequalities behind the analysis.

Each harness draws a reproducible sample family, evaluates LHS/RHS per
sample and reports the maximum. The inequalities only hold up to
unspecified constants, so a verdict compares the maximum against a frozen
fixture: the first recorded maximum times 1.5.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .dirichlet import DirichletBasis
from .fields import Grid2D, density_values
from .norms import AdmissibleTriple, _combine, homogeneous_sobolev_sq, lp_norm, time_lq
from .poisson import torus_potential
from .reporting import canonical_json, config_hash, csv_header, fmt
from .spectral import DyadicPartition, fft, ifft

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures" / "v1"
BUDGET_FACTOR = 1.5


# -- reports -----------------------------------------------------------------


@dataclass
class RatioReport:
    """Per-sample ratios of one inequality; ``None`` marks a skipped sample."""

    name: str
    family: str
    ratios: list
    seed: int
    config: dict
    budget: Optional[float] = None
    extra: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.ratios:
            if r is not None and not (np.isfinite(r) and r >= 0):
                raise ValueError(f"ratio {r} is not finite and nonnegative")

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def kept(self) -> list:
        return [r for r in self.ratios if r is not None]

    @property
    def max_ratio(self) -> float:
        return max(self.kept) if self.kept else 0.0

    @property
    def verdict(self) -> str:
        if self.budget is None:
            return "UNFROZEN"
        ok = self.max_ratio <= self.budget and all(self.checks.values())
        return "PASS" if ok else "FAIL"

    def summary(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "max_ratio": self.max_ratio,
            "budget": self.budget,
            "verdict": self.verdict,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "samples": len(self.ratios),
            "skipped": sum(r is None for r in self.ratios),
            "extra": self.extra,
            "checks": self.checks,
        }

    def summary_json(self) -> str:
        return json.dumps(json.loads(canonical_json(self.summary())), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = csv_header(self.config_hash, {"name": self.name, "seed": self.seed})
        lines.append("sample_index,ratio")
        for i, r in enumerate(self.ratios):
            lines.append(f"{i},{'skipped' if r is None else fmt(r)}")
        return "\n".join(lines) + "\n"


class FixtureMismatch(RuntimeError):
    """A frozen fixture is missing or was recorded for a different configuration."""


def load_fixture(name: str, directory: Path = FIXTURE_DIR) -> dict:
    path = Path(directory) / f"{name}.json"
    if not path.exists():
        raise FixtureMismatch(f"no frozen fixture for {name!r} in {directory}")
    return json.loads(path.read_text())


def apply_fixture(report: RatioReport, directory: Path = FIXTURE_DIR) -> RatioReport:
    """Attach the frozen budget; reject fixtures recorded under another config hash."""
    fx = load_fixture(report.name, directory)
    if fx["config_hash"] != report.config_hash:
        raise FixtureMismatch(
            f"fixture {report.name!r} was frozen for config {fx['config_hash']}, run has {report.config_hash}")
    report.budget = float(fx["budget"])
    return report


def freeze_fixture(report: RatioReport, directory: Path = FIXTURE_DIR, allow: bool = False) -> dict:
    """Record max ratio x 1.5 as the budget. Refuses unless ``allow`` is set."""
    if not allow:
        raise PermissionError("freezing a fixture must be requested explicitly")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fx = {
        "name": report.name,
        "max_ratio": report.max_ratio,
        "budget": BUDGET_FACTOR * report.max_ratio,
        "config_hash": report.config_hash,
        "config": report.config,
        "seed": report.seed,
    }
    (directory / f"{report.name}.json").write_text(json.dumps(json.loads(canonical_json(fx)), indent=2, sort_keys=True) + "\n")
    report.budget = fx["budget"]
    return fx


# -- sample families ---------------------------------------------------------


def random_band_limited(grid: Grid2D, rng: np.random.Generator, kmax: Optional[float] = None) -> np.ndarray:
    """Spinor array with Gaussian coefficients on lattice frequencies |k| <= kmax.

    Envelope (1 + |k|^2)^(-1); normalized to unit L^2 norm.
    """
    n = grid.points_per_axis
    kmax = n / 8 if kmax is None else kmax
    k = np.fft.fftfreq(n, d=1.0 / n)
    kk = np.hypot(*np.meshgrid(k, k, indexing="ij"))
    env = np.where(kk <= kmax, 1.0 / (1.0 + kk**2), 0.0)
    coeff = (rng.standard_normal((2, n, n)) + 1j * rng.standard_normal((2, n, n))) * env
    values = ifft(coeff)
    return values / np.sqrt(np.vdot(values, values).real * grid.cell_area)


def random_mixture(grid: Grid2D, rng: np.random.Generator, states: int = 3):
    stack = np.stack([random_band_limited(grid, rng) for _ in range(states)])
    weights = rng.uniform(0.2, 1.0, states)
    return stack, weights / weights.sum()


def random_gaussian_mixture(grid: Grid2D, rng: np.random.Generator) -> np.ndarray:
    """Sum of 1-4 Gaussian bumps, localized well inside the torus."""
    x1, x2 = grid.mesh()
    L = grid.half_length
    out = np.zeros((2,) + grid.shape, dtype=np.complex128)
    for _ in range(rng.integers(1, 5)):
        c = rng.uniform(-L / 4, L / 4, 2)
        w = rng.uniform(0.75, 2.0) * L / 16
        amp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        env = np.exp(-((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2) / (2 * w**2))
        out += amp[:, None, None] * env[None]
    return out


def random_dirichlet_scalar(basis: DirichletBasis, rng: np.random.Generator, pmax: int = 8) -> np.ndarray:
    """Real grid function with Gaussian coefficients on modes p, q <= pmax, envelope 1/(p^2+q^2)."""
    idx = basis.indices
    keep = np.all(idx <= pmax, axis=1)
    env = np.where(keep, 1.0 / np.sum(idx**2, axis=1), 0.0)
    return basis.inverse(rng.standard_normal(basis.size) * env)


# -- per-sample ratios -------------------------------------------------------


def _mixed_besov_in_time(hat, weights, grid, times, s, p, sign, partition, chunk=16):
    """t -> ||K_sign(t) u||_{B^s_{p,2}(lambda)} for the spectral stack ``hat`` (J, 2, N, N)."""
    r = grid.frequency_modulus()
    blocks = partition.blocks(grid)
    pieces = np.empty((len(times), hat.shape[0], len(blocks)))
    for k, phi in enumerate(blocks):
        hk = hat * phi
        for lo in range(0, len(times), chunk):
            t = np.asarray(times[lo:lo + chunk])
            phase = np.exp(sign * 1j * t[:, None, None] * r)
            vals = ifft(hk[None] * phase[:, None, None])  # (m, J, 2, N, N)
            mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=2))
            if np.isinf(p):
                pieces[lo:lo + len(t), :, k] = mod.max(axis=(-2, -1))
            else:
                pieces[lo:lo + len(t), :, k] = (np.sum(mod**p, axis=(-2, -1)) * grid.cell_area) ** (1.0 / p)
    besov = np.array([[_combine(pieces[m, j], s, 2.0) for j in range(hat.shape[0])] for m in range(len(times))])
    return np.sqrt(besov**2 @ np.asarray(weights))


def strichartz_ratio(stack, weights, grid: Grid2D, triple: AdmissibleTriple, T: float, sign: int = 1,
                     nodes: int = 64, partition: DyadicPartition = None) -> float:
    """||K_sign(t) u||_{L^q_T B^{-s}_{r,2}(lambda)} / ||u||_{L^2(lambda)} over t in [-T, T]."""
    stack = np.asarray(stack)
    if stack.ndim == 3:
        stack, weights = stack[None], [1.0]
    weights = np.asarray(weights, dtype=float)
    rhs = np.sqrt(sum(w * np.vdot(u, u).real * grid.cell_area for w, u in zip(weights, stack)))
    if rhs == 0:
        return 0.0
    times = np.linspace(-T, T, nodes)
    g = _mixed_besov_in_time(fft(stack), weights, grid, times, -triple.s, triple.r, sign, partition or DyadicPartition())
    return float(time_lq(g, times, triple.q) / rhs)


def duhamel_ratio(a, b, omega, weights, grid: Grid2D, out_triple: AdmissibleTriple, in_triple: AdmissibleTriple,
                  T: float, sign: int = 1, nodes: int = 16, partition: DyadicPartition = None) -> float:
    """Retarded Strichartz ratio for the forcing f_j(t) = a_j cos(w_j t) + b_j sin(w_j t).

    LHS: || int_{-T}^{t} K(t - t') f(t') dt' ||_{L^q1_T B^{-s1}_{r1,2}(lambda)}, trapezoid in t'.
    RHS: || f ||_{L^{q2'}_T B^{s2}_{r2',2}(lambda)}.
    """
    partition = partition or DyadicPartition()
    weights = np.asarray(weights, dtype=float)
    omega = np.asarray(omega, dtype=float)
    times = np.linspace(-T, T, nodes)
    dt = times[1] - times[0]
    f = (np.cos(np.outer(times, omega))[:, :, None, None, None] * a[None]
         + np.sin(np.outer(times, omega))[:, :, None, None, None] * b[None])  # (M, J, 2, N, N)
    r = grid.frequency_modulus()
    fhat = fft(f)
    pulled = fhat * np.exp(-sign * 1j * times[:, None, None] * r)[:, None, None]
    acc = np.zeros_like(pulled)
    for m in range(1, nodes):
        acc[m] = acc[m - 1] + 0.5 * dt * (pulled[m - 1] + pulled[m])
    duhamel_hat = acc * np.exp(sign * 1j * times[:, None, None] * r)[:, None, None]
    lhs_t = np.array([_mixed_besov_in_time(duhamel_hat[m], weights, grid, [0.0], -out_triple.s, out_triple.r,
                                           sign, partition)[0] for m in range(nodes)])
    r_dual = in_triple.r / (in_triple.r - 1.0)
    q_dual = in_triple.q / (in_triple.q - 1.0)
    rhs_t = np.array([_mixed_besov_in_time(fhat[m], weights, grid, [0.0], in_triple.s, r_dual, sign, partition)[0]
                      for m in range(nodes)])
    rhs = time_lq(rhs_t, times, q_dual)
    if rhs == 0:
        return None
    return float(time_lq(lhs_t, times, out_triple.q) / rhs)


def _hardy_kernel(grid: Grid2D) -> np.ndarray:
    """h^2/|y| on the minimum-image lattice; the origin cell holds its exact integral 4h asinh(1)."""
    n, h = grid.points_per_axis, grid.spacing
    k = np.fft.fftfreq(n, d=1.0 / n) * h
    dist = np.hypot(*np.meshgrid(k, k, indexing="ij"))
    kern = np.zeros_like(dist)
    kern[dist > 0] = grid.cell_area / dist[dist > 0]
    kern[0, 0] = 4.0 * h * np.arcsinh(1.0)
    return kern


def hardy_ratio(values, grid: Grid2D, kernel: np.ndarray = None) -> Optional[float]:
    """sup_x int |Psi(x-y)|^2/|y| dy / ||Psi||^2 in the homogeneous H^(1/2); None if Psi = 0."""
    values = np.asarray(values)
    rhs = homogeneous_sobolev_sq(values, grid, 0.5)
    if rhs == 0:
        return None
    kernel = _hardy_kernel(grid) if kernel is None else kernel
    dens = np.sum(np.abs(values) ** 2, axis=0)
    conv = ifft(fft(dens) * fft(kernel)).real
    return float(conv.max() / rhs)


def nonlinear_ratio(stack, weights, grid: Grid2D, s: float) -> Optional[float]:
    """||V(Psi) Psi||_{H^s(lambda)} / ||Psi||^3_{H^s(lambda)}; None if Psi = 0."""
    stack = np.asarray(stack)
    weights = np.asarray(weights, dtype=float)
    r = grid.frequency_modulus()
    weight = (1.0 + r**2) ** s
    parseval = grid.cell_area / grid.points_per_axis**2

    def hs_lambda(st):
        return np.sqrt(sum(w * np.sum(weight * np.abs(fft(u)) ** 2) * parseval for w, u in zip(weights, st)))

    rhs = hs_lambda(stack) ** 3
    if rhs == 0:
        return None
    v = torus_potential(density_values(stack, weights), grid)
    return float(hs_lambda(v * stack) / rhs)


def check_product_params(case: str, s: float, sigma: Optional[float]) -> None:
    if case == "prod1":
        if not 0 < s < 2.5:
            raise ValueError("prod1 needs 0 < s < 5/2")
        if sigma is None or sigma < max(s, 1.0) or (s == 1.0 and not sigma > 1.0):
            raise ValueError("prod1 needs sigma >= max(s, 1), and sigma > 1 when s = 1")
    elif case == "prod2":
        if not 0.5 <= s < 1.0:
            raise ValueError("prod2 needs 1/2 <= s < 1")
    else:
        raise ValueError(f"unknown product case {case!r}")


def _scalar_hs(values, s, basis):
    c = basis.forward(values)
    return float(np.sqrt(np.sum(basis.eigenvalues**s * np.abs(c) ** 2)))


def product_ratio(case: str, u, v, basis: DirichletBasis, s: float, sigma: Optional[float] = None) -> Optional[float]:
    """LHS/RHS of the product estimate on the rectangle for scalar grid functions u, v."""
    check_product_params(case, s, sigma)
    uv = np.asarray(u) * np.asarray(v)
    if case == "prod1":
        lhs = _scalar_hs(uv, s, basis)
        rhs = _scalar_hs(u, s, basis) * (_scalar_hs(v, sigma, basis) + float(np.max(np.abs(v))))
    else:
        lhs = _scalar_hs(uv, 2 * s - 1, basis)
        rhs = _scalar_hs(u, s, basis) * _scalar_hs(v, s, basis)
    if rhs == 0:
        return None
    return float(lhs / rhs)


def besov_sobolev_ratio(values, grid: Grid2D, s: float, partition: DyadicPartition = None) -> float:
    """B^s_{2,2} norm over the multiplier H^s norm for one spinor array."""
    blocks = (partition or DyadicPartition()).blocks(grid)
    hat = fft(values)
    pieces = [lp_norm(ifft(hat * phi), grid.cell_area, 2.0) for phi in blocks]
    besov = _combine(pieces, s, 2.0)
    weight = (1.0 + grid.frequency_modulus() ** 2) ** s
    hs = np.sqrt(np.sum(weight * np.sum(np.abs(hat) ** 2, axis=0)) * grid.cell_area / grid.points_per_axis**2)
    return float(besov / hs)


# -- harness drivers ---------------------------------------------------------


HARNESS_DEFAULTS = {
    "strichartz": {"r": 4.0, "T": 1.0, "samples": 50, "seed": 42, "L": float(np.pi), "N": 64,
                   "states": 3, "nodes": 64, "sign": 1},
    "strichartz-duhamel": {"r_out": 4.0, "r_in": 4.0, "T": 1.0, "samples": 20, "seed": 5, "L": float(np.pi),
                           "N": 64, "states": 2, "nodes": 16, "sign": 1},
    "hardy": {"samples": 30, "seed": 7, "L": 16.0, "N": 256},
    "nonlinear": {"s": 0.5, "samples": 30, "seed": 11, "L": float(np.pi), "N": 64, "states": 3},
    "prod1": {"s": 1.5, "sigma": 2.5, "samples": 30, "seed": 13, "modes": 32, "intervals": 64, "pmax": 8},
    "prod2": {"s": 0.75, "samples": 30, "seed": 13, "modes": 32, "intervals": 64, "pmax": 8},
    "besov-equivalence": {"s": 0.5, "samples": 100, "seed": 17, "L": float(np.pi), "N": 64},
}


def harness_config(name: str, overrides: Optional[dict] = None) -> dict:
    if name not in HARNESS_DEFAULTS:
        raise KeyError(f"unknown harness {name!r}; known: {sorted(HARNESS_DEFAULTS)}")
    cfg = dict(HARNESS_DEFAULTS[name])
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise KeyError(f"harness {name!r} has no parameter {key!r}")
        cfg[key] = type(cfg[key])(value)
    return cfg


def _map(fn: Callable, items, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def strichartz_harness(triple: AdmissibleTriple, T: float, samples: int, rng_seed: int, *, L=np.pi, N=64,
                       states=3, nodes=64, sign=1, workers=1, config=None) -> RatioReport:
    """Ratios at T, plus the max ratio at 2T for the doubling-stability check."""
    grid = Grid2D(L, N)
    rng = np.random.default_rng(rng_seed)
    draws = [random_mixture(grid, rng, states) for _ in range(samples)]
    ratios = _map(lambda d: strichartz_ratio(d[0], d[1], grid, triple, T, sign, nodes), draws, workers)
    doubled = _map(lambda d: strichartz_ratio(d[0], d[1], grid, triple, 2 * T, sign, nodes), draws, workers)
    max_t, max_2t = max(ratios), max(doubled)
    stability = max_2t / max_t if max_t > 0 else 1.0
    cfg = config or {"harness": "strichartz", "r": triple.r, "T": T, "samples": samples, "seed": rng_seed,
                     "L": L, "N": N, "states": states, "nodes": nodes, "sign": sign}
    return RatioReport("strichartz", f"random band-limited {states}-state mixtures, |k| <= N/8", ratios, rng_seed,
                       cfg, extra={"max_ratio_2T": max_2t, "stability": stability},
                       checks={"doubling_stable": abs(stability - 1.0) <= 0.25})


def duhamel_harness(out_triple: AdmissibleTriple, in_triple: AdmissibleTriple, T: float, samples: int,
                    rng_seed: int, *, L=np.pi, N=64, states=2, nodes=16, sign=1, workers=1, config=None) -> RatioReport:
    grid = Grid2D(L, N)
    rng = np.random.default_rng(rng_seed)
    draws = []
    for _ in range(samples):
        a, w = random_mixture(grid, rng, states)
        b, _ = random_mixture(grid, rng, states)
        draws.append((a, b, rng.uniform(0.5, 2.0, states), w))
    ratios = _map(lambda d: duhamel_ratio(d[0], d[1], d[2], d[3], grid, out_triple, in_triple, T, sign, nodes),
                  draws, workers)
    return RatioReport("strichartz-duhamel", "random harmonic forcings on band-limited mixtures", ratios, rng_seed,
                       config or {"harness": "strichartz-duhamel"})


def hardy_harness(samples: int, rng_seed: int, *, L=16.0, N=256, workers=1, config=None) -> RatioReport:
    grid = Grid2D(L, N)
    rng = np.random.default_rng(rng_seed)
    kernel = _hardy_kernel(grid)
    draws = [random_gaussian_mixture(grid, rng) for _ in range(samples)]
    ratios = _map(lambda u: hardy_ratio(u, grid, kernel), draws, workers)
    return RatioReport("hardy", "random Gaussian mixtures of 1-4 bumps", ratios, rng_seed,
                       config or {"harness": "hardy", "samples": samples, "seed": rng_seed, "L": L, "N": N})


def nonlinear_bound_harness(s: float, samples: int, rng_seed: int, *, L=np.pi, N=64, states=3, workers=1,
                            config=None) -> RatioReport:
    if s < 0.5:
        raise ValueError("the cubic bound is tested for s >= 1/2")
    grid = Grid2D(L, N)
    rng = np.random.default_rng(rng_seed)
    draws = [random_mixture(grid, rng, states) for _ in range(samples)]
    ratios = _map(lambda d: nonlinear_ratio(d[0], d[1], grid, s), draws, workers)
    return RatioReport("nonlinear", f"random band-limited {states}-state mixtures", ratios, rng_seed,
                       config or {"harness": "nonlinear", "s": s, "samples": samples, "seed": rng_seed})


def product_estimate_harness(case: str, s: float, sigma: Optional[float], samples: int, basis: DirichletBasis,
                             rng_seed: int, *, pmax=8, workers=1, config=None) -> RatioReport:
    check_product_params(case, s, sigma)
    rng = np.random.default_rng(rng_seed)
    draws = [(random_dirichlet_scalar(basis, rng, pmax), random_dirichlet_scalar(basis, rng, pmax))
             for _ in range(samples)]
    ratios = _map(lambda d: product_ratio(case, d[0], d[1], basis, s, sigma), draws, workers)
    return RatioReport(case, f"random Dirichlet modes p, q <= {pmax} on the rectangle", ratios, rng_seed,
                       config or {"harness": case, "s": s, "sigma": sigma, "samples": samples, "seed": rng_seed})


def besov_equivalence_harness(s: float, samples: int, rng_seed: int, *, L=np.pi, N=64, workers=1,
                              config=None) -> RatioReport:
    """Per-sample max(B/H, H/B) for B^s_{2,2} against the multiplier H^s norm."""
    grid = Grid2D(L, N)
    rng = np.random.default_rng(rng_seed)
    draws = [random_band_limited(grid, rng) for _ in range(samples)]
    raw = _map(lambda u: besov_sobolev_ratio(u, grid, s), draws, workers)
    return RatioReport("besov-equivalence", "random band-limited spinor fields, max(ratio, 1/ratio)",
                       [max(r, 1.0 / r) for r in raw], rng_seed, config or {"harness": "besov-equivalence"},
                       extra={"min_ratio": min(raw), "max_ratio": max(raw)})


def run_harness(name: str, overrides: Optional[dict] = None, workers: int = 1) -> RatioReport:
    """Run a named harness with its default configuration (plus overrides)."""
    cfg = harness_config(name, overrides)
    provenance = {"harness": name, **cfg}
    if name == "strichartz":
        return strichartz_harness(AdmissibleTriple.from_r(cfg["r"]), cfg["T"], cfg["samples"], cfg["seed"],
                                  L=cfg["L"], N=cfg["N"], states=cfg["states"], nodes=cfg["nodes"],
                                  sign=cfg["sign"], workers=workers, config=provenance)
    if name == "strichartz-duhamel":
        return duhamel_harness(AdmissibleTriple.from_r(cfg["r_out"]), AdmissibleTriple.from_r(cfg["r_in"]),
                               cfg["T"], cfg["samples"], cfg["seed"], L=cfg["L"], N=cfg["N"],
                               states=cfg["states"], nodes=cfg["nodes"], sign=cfg["sign"], workers=workers,
                               config=provenance)
    if name == "hardy":
        return hardy_harness(cfg["samples"], cfg["seed"], L=cfg["L"], N=cfg["N"], workers=workers, config=provenance)
    if name == "nonlinear":
        return nonlinear_bound_harness(cfg["s"], cfg["samples"], cfg["seed"], L=cfg["L"], N=cfg["N"],
                                       states=cfg["states"], workers=workers, config=provenance)
    if name in ("prod1", "prod2"):
        basis = DirichletBasis.rectangle(np.pi, np.pi, cfg["modes"], cfg["intervals"])
        return product_estimate_harness(name, cfg["s"], cfg.get("sigma"), cfg["samples"], basis, cfg["seed"],
                                        pmax=cfg["pmax"], workers=workers, config=provenance)
    return besov_equivalence_harness(cfg["s"], cfg["samples"], cfg["seed"], L=cfg["L"], N=cfg["N"],
                                     workers=workers, config=provenance)


HARNESS_NAMES = tuple(HARNESS_DEFAULTS)
