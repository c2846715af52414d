"""`dhl` command line: evolve, contraction-probe, verify, counterexample.

Exit codes: 0 success, 1 configuration error, 2 numerical abort,
3 fixture mismatch or failed inequality verdict.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harnesses
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config
from .dirichlet import DirichletBasis, coefficient_slope, counterexample_divergence, decade_increments
from .dynamics import (
    EvolutionConfig,
    NumericalAbort,
    PicardConfig,
    RectangleGeometry,
    TorusGeometry,
    contraction_probe,
    picard_solve,
    run_evolution,
)
from .fields import Grid2D, MixedState, SpinorField, gaussian_packet, plane_wave, read_field, write_field
from .propagator import apply_band_projector
from .reporting import canonical_json, config_hash, csv_header, fmt

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_VERDICT = 0, 1, 2, 3


def _spinor(entry: dict):
    re = np.asarray(entry.get("spinor", [1.0, 0.0]), dtype=float)
    im = np.asarray(entry.get("spinor_imag", [0.0, 0.0]), dtype=float)
    return re + 1j * im


def build_initial_state(cfg: ExperimentConfig):
    """Return (MixedState, geometry adapter) for the configured recipes."""
    geo = cfg.geometry
    if geo["kind"] == "torus":
        grid = Grid2D(geo["L"], geo["N"])
        basis, geometry = None, TorusGeometry(grid)
    else:
        basis = DirichletBasis.rectangle(geo["a"], geo["b"], geo["modes"], geo["intervals"])
        grid, geometry = basis.grid, RectangleGeometry(basis)
    torus = basis is None
    fields, weights = [], []
    for i, st in enumerate(cfg.states):
        recipe = st["recipe"]
        if recipe == "gaussian":
            default_center = [0.0, 0.0] if torus else [geo["a"] / 2, geo["b"] / 2]
            psi = gaussian_packet(grid, st.get("center", default_center), st.get("width", 1.0),
                                  st.get("momentum", [0.0, 0.0]), _spinor(st), st.get("amplitude", 1.0))
        elif recipe == "plane_wave":
            if not torus:
                raise ConfigError([f"[[states]] entry {i}: plane waves need a torus geometry"])
            psi = plane_wave(grid, st.get("k", [0.0, 0.0]), _spinor(st), st.get("mass", 1.0))
        elif recipe == "mode":
            values = np.zeros((2,) + grid.shape, dtype=np.complex128)
            values[int(st.get("component", 0))] = st.get("amplitude", 1.0) * basis.eigenfunction(st.get("p", 1), st.get("q", 1))
            psi = SpinorField(grid, values)
        elif recipe == "random":
            if not torus:
                raise ConfigError([f"[[states]] entry {i}: random band-limited states need a torus geometry"])
            rng = np.random.default_rng([cfg.seed, int(st.get("seed", i))])
            psi = SpinorField(grid, harnesses.random_band_limited(grid, rng, st.get("kmax")))
        else:
            path = Path(st["path"])
            psi = read_field(path if path.is_absolute() else cfg.base_dir / path, geo["kind"])
            if psi.grid != grid:
                raise ConfigError([f"[[states]] entry {i}: dumped field grid {psi.grid} does not match the geometry"])
        band = st.get("band", "none")
        if band != "none":
            if not torus:
                raise ConfigError([f"[[states]] entry {i}: band projection needs a torus geometry"])
            psi = apply_band_projector(1 if band == "+" else -1, psi)
        if not torus:
            psi = SpinorField(grid, basis.project(psi.values))
        fields.append(psi)
        weights.append(float(st.get("weight", 1.0)))
    return MixedState(tuple(fields), np.asarray(weights)), geometry


def _provenance(cfg: ExperimentConfig, **extra) -> dict:
    return {"config": cfg.raw, "command": cfg.command, "seed": cfg.seed, **extra}


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, obj):
    _write(path, json.dumps(json.loads(canonical_json(obj)), indent=2, sort_keys=True) + "\n")


def _failure(out: Path, code: int, message: str, **details) -> int:
    _write_json(out / "failure.json", {"status": "failed", "exit_code": code, "message": message, **details})
    print(f"dhl: {message}", file=sys.stderr)
    return code


def cmd_evolve(cfg: ExperimentConfig, out: Path, free_field: bool) -> int:
    state, geometry = build_initial_state(cfg)
    prov = _provenance(cfg, free_field=free_field)
    try:
        report = run_evolution(state, cfg.evolution, geometry, free_field=free_field, provenance=prov)
    except NumericalAbort as exc:
        last = None
        if exc.last is not None:
            last = {"t": exc.last.t, "masses": list(exc.last.masses), "energy": exc.last.energy,
                    "hs_lambda": exc.last.hs_lambda}
        return _failure(out, EXIT_ABORT, str(exc), config_hash=config_hash(prov), last_diagnostics=last)
    _write(out / "diagnostics.csv", report.to_csv())
    for t, snap in sorted(report.snapshots.items()):
        for j, psi in enumerate(snap.states):
            with open(out / f"snapshot_t{fmt(t)}_state{j}.dhl", "wb") as fh:
                write_field(fh, psi)
    masses = report.masses
    mass_drift = float(np.max(np.abs(masses - masses[0]) / masses[0]))
    _write_json(out / "summary.json", {
        "status": "ok", "command": "evolve", "config_hash": config_hash(prov), "energy_label": report.label,
        "energy_drift": report.energy_drift(), "mass_drift": mass_drift, "steps": cfg.evolution.steps,
        "final_time": float(report.times[-1]),
    })
    return EXIT_OK


def cmd_probe(cfg: ExperimentConfig, out: Path) -> int:
    state, geometry = build_initial_state(cfg)
    prov = _provenance(cfg)
    chash = config_hash(prov)
    reports, t_star = contraction_probe(state, cfg.probe.T_values, cfg.picard, geometry, cfg.probe.noise_floor)
    lines = csv_header(chash, {"s": cfg.picard.s})
    lines.append("T,iteration,distance,ratio")
    for rep in reports:
        for n, d in enumerate(rep.distances):
            ratio = rep.ratios[n - 1] if n >= 1 else float("nan")
            lines.append(f"{fmt(rep.T)},{n + 1},{fmt(d)},{fmt(ratio)}")
    _write(out / "contraction.csv", "\n".join(lines) + "\n")
    floor = cfg.probe.noise_floor
    summary = {
        "status": "ok", "command": "contraction-probe", "config_hash": chash, "t_star": t_star,
        "probes": [{"T": r.T, "converged": r.converged, "iterations": r.iterations,
                    "max_ratio": r.contraction_constant(floor * max(r.distances[0], 1e-300)) if r.distances else None}
                   for r in reports],
    }
    if cfg.probe.compare_dt and t_star is not None:
        summary["strang_gap"] = strang_gap(state, t_star, cfg.probe.compare_dt, cfg.picard, geometry)
        summary["compare_dt"] = cfg.probe.compare_dt
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def strang_gap(state: MixedState, T: float, dt: float, picard: PicardConfig, geometry) -> float:
    """L^2(lambda) distance at t = T between Picard (step dt) and Strang (step dt)."""
    steps = max(1, int(round(T / dt)))
    pcfg = PicardConfig(picard.max_iters, picard.tolerance, steps, picard.s)
    pic = picard_solve(state, T, pcfg, geometry)
    run = run_evolution(state, EvolutionConfig(geometry=geometry.name, dt=T / steps, T=T, snapshot_times=(T,)),
                        geometry)
    strang = run.snapshots[T].stacked()
    diff = pic.trajectory[-1] - strang
    return float(np.sqrt(sum(w * geometry.mass(d) for w, d in zip(state.weights, diff))))


def cmd_verify(cfg: ExperimentConfig, out: Path, freeze: bool, seed_override) -> int:
    names = harnesses.HARNESS_NAMES if cfg.verify.name == "all" else (cfg.verify.name,)
    fixture_dir = Path(cfg.verify.fixture_dir) if cfg.verify.fixture_dir else harnesses.FIXTURE_DIR
    if cfg.verify.fixture_dir and not fixture_dir.is_absolute():
        fixture_dir = cfg.base_dir / fixture_dir
    verdicts = {}
    for name in names:
        overrides = {k: v for k, v in cfg.verify.params.items() if k in harnesses.HARNESS_DEFAULTS[name]}
        if seed_override is not None:
            overrides["seed"] = seed_override
        report = harnesses.run_harness(name, overrides, workers=cfg.workers())
        if freeze:
            harnesses.freeze_fixture(report, fixture_dir, allow=True)
        else:
            try:
                harnesses.apply_fixture(report, fixture_dir)
            except harnesses.FixtureMismatch as exc:
                _write(out / f"{name}_ratios.csv", report.to_csv())
                return _failure(out, EXIT_VERDICT, str(exc), harness=name, config_hash=report.config_hash)
        _write(out / f"{name}_ratios.csv", report.to_csv())
        _write(out / f"{name}_summary.json", report.summary_json())
        verdicts[name] = report.verdict
        print(f"{name}: max ratio {report.max_ratio:.6g}, budget {report.budget:.6g} -> {report.verdict}")
    if any(v == "FAIL" for v in verdicts.values()):
        return _failure(out, EXIT_VERDICT, "inequality budget exceeded", verdicts=verdicts)
    return EXIT_OK


def cmd_counterexample(cfg: ExperimentConfig, out: Path) -> int:
    cx = cfg.counterexample
    table = counterexample_divergence(cx.s_values, cx.n_values, cx.points)
    prov = _provenance(cfg)
    chash = config_hash(prov)
    _write(out / "divergence.csv", "\n".join(csv_header(chash)) + "\n" + table.to_csv())
    lines = csv_header(chash) + ["p,c_p"]
    lines += [f"{p},{fmt(c)}" for p, c in enumerate(table.coefficients, start=1)]
    _write(out / "coefficients.csv", "\n".join(lines) + "\n")
    pmax = min(10_000, table.coefficients.size)
    summary = {"status": "ok", "command": "counterexample", "config_hash": chash,
               "decade_increments": {fmt(s): [[n, d] for n, d in decade_increments(table, s)] for s in cx.s_values}}
    if pmax > 100:
        summary["coefficient_slope"] = coefficient_slope(table.coefficients, 100, pmax)
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dhl", description="Dirac-Hartree spectral simulator and verification toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("name", nargs="?", help="harness name for 'verify' (default: config or all)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    p.add_argument("--freeze-fixtures", action="store_true", help="record new fixture budgets (verify only)")
    p.add_argument("--free-field", action="store_true", help="drop the Hartree potential")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed override")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(["--seed must be an unsigned 64-bit integer"])
        cfg = load_config(args.config, args.command)
        if args.name is not None:
            if args.command != "verify":
                raise ConfigError([f"a harness name is only accepted by 'verify', got {args.name!r}"])
            if args.name not in harnesses.HARNESS_DEFAULTS and args.name != "all":
                raise ConfigError([f"unknown harness {args.name!r}"])
            cfg.verify.name = args.name
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out) if args.out else cfg.base_dir / cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        if cfg.command == "evolve":
            return cmd_evolve(cfg, out, args.free_field)
        if cfg.command == "contraction-probe":
            return cmd_probe(cfg, out)
        if cfg.command == "verify":
            return cmd_verify(cfg, out, args.freeze_fixtures, args.seed)
        return cmd_counterexample(cfg, out)
    except ConfigError as exc:
        print(f"dhl: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
