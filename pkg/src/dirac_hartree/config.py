"""Experiment configuration: one flat TOML file per run.

Schema (every key optional unless noted)::

    command = "evolve"          # evolve | contraction-probe | verify | counterexample
    threads = 1
    seed = 0                    # base seed for "random" state recipes

    [geometry]
    kind = "torus"              # torus: L, N   rectangle: a, b, modes, intervals
    L = 8.0
    N = 128

    [[states]]                  # required for evolve and contraction-probe
    recipe = "gaussian"         # gaussian | plane_wave | mode | random | file
    weight = 0.5
    ...                         # recipe parameters, see STATE_KEYS

    [evolution]                 # dt, T, scheme, diagnostics_every, s, snapshot_times
    [picard]                    # max_iters, tolerance, quadrature_substeps, s
    [probe]                     # T_values, noise_floor, compare_dt
    [verify]                    # name, fixture_dir, and [verify.params] overrides
    [counterexample]            # s_values, n_values, points
    [output]                    # dir
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import EvolutionConfig, PicardConfig
from .harnesses import HARNESS_DEFAULTS

COMMANDS = ("evolve", "contraction-probe", "verify", "counterexample")

TOP_KEYS = {"command", "threads", "seed", "geometry", "states", "evolution", "picard", "probe", "verify",
            "counterexample", "output"}
GEOMETRY_KEYS = {"torus": {"kind", "L", "N"}, "rectangle": {"kind", "a", "b", "modes", "intervals"}}
COMMON_STATE_KEYS = {"recipe", "weight"}
STATE_KEYS = {
    "gaussian": {"center", "width", "momentum", "spinor", "spinor_imag", "amplitude", "band"},
    "plane_wave": {"k", "spinor", "spinor_imag", "mass"},
    "mode": {"p", "q", "component", "amplitude"},
    "random": {"seed", "kmax", "band"},
    "file": {"path"},
}
EVOLUTION_KEYS = {"dt", "T", "scheme", "diagnostics_every", "s", "snapshot_times"}
PICARD_KEYS = {"max_iters", "tolerance", "quadrature_substeps", "s"}
PROBE_KEYS = {"T_values", "noise_floor", "compare_dt"}
VERIFY_KEYS = {"name", "fixture_dir", "params"}
COUNTEREXAMPLE_KEYS = {"s_values", "n_values", "points"}
OUTPUT_KEYS = {"dir"}


class ConfigError(ValueError):
    """All violations found in a config, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class ProbeConfig:
    T_values: tuple = (0.05, 0.1, 0.2, 0.4)
    noise_floor: float = 1e-12
    compare_dt: Optional[float] = None


@dataclass
class VerifyConfig:
    name: str = "all"
    fixture_dir: Optional[str] = None
    params: dict = field(default_factory=dict)


@dataclass
class CounterexampleConfig:
    s_values: tuple = (2.5, 2.4)
    n_values: tuple = (100, 1000, 10_000, 100_000)
    points: int = 2**21


@dataclass
class ExperimentConfig:
    command: str
    geometry: dict = field(default_factory=lambda: {"kind": "torus", "L": 8.0, "N": 128})
    states: list = field(default_factory=list)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    picard: PicardConfig = field(default_factory=PicardConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    counterexample: CounterexampleConfig = field(default_factory=CounterexampleConfig)
    output_dir: str = "dhl-out"
    threads: int = 1
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    def workers(self) -> int:
        env = os.environ.get("DHL_THREADS")
        if env:
            return max(1, int(env))
        return max(1, int(self.threads))


def _unknown(section: str, table: dict, allowed: set, errors: list):
    for key in table:
        if key not in allowed:
            errors.append(f"unknown key {key!r} in {section}")


def _section(raw: dict, name: str, allowed: set, errors: list) -> dict:
    table = raw.get(name, {})
    if not isinstance(table, dict):
        errors.append(f"[{name}] must be a table")
        return {}
    _unknown(f"[{name}]", table, allowed, errors)
    return {k: v for k, v in table.items() if k in allowed}


def _build(cls, kwargs: dict, section: str, errors: list):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{section}] {exc}")
        return cls()


def _check_geometry(geo: dict, errors: list) -> dict:
    kind = geo.get("kind", "torus")
    if kind not in GEOMETRY_KEYS:
        errors.append(f"[geometry] kind must be 'torus' or 'rectangle', got {kind!r}")
        return {"kind": "torus", "L": 8.0, "N": 128}
    _unknown("[geometry]", geo, GEOMETRY_KEYS[kind], errors)
    if kind == "torus":
        out = {"kind": kind, "L": float(geo.get("L", 8.0)), "N": int(geo.get("N", 128))}
        n = out["N"]
        if n < 8 or n & (n - 1):
            errors.append("[geometry] N must be a power of two >= 8")
        if not out["L"] > 0:
            errors.append("[geometry] L must be positive")
    else:
        out = {"kind": kind, "a": float(geo.get("a", 3.141592653589793)), "b": float(geo.get("b", 3.141592653589793)),
               "intervals": int(geo.get("intervals", 64))}
        # the full interior basis keeps the Strang substeps exactly unitary
        out["modes"] = int(geo.get("modes", out["intervals"] - 1))
        if not (out["a"] > 0 and out["b"] > 0):
            errors.append("[geometry] a and b must be positive")
        if not 1 <= out["modes"] <= out["intervals"] - 1:
            errors.append("[geometry] need 1 <= modes <= intervals - 1")
    return out


def _check_states(states, geometry: dict, base_dir: Path, errors: list) -> list:
    if not isinstance(states, list):
        errors.append("[[states]] must be an array of tables")
        return []
    out = []
    for i, st in enumerate(states):
        where = f"[[states]] entry {i}"
        recipe = st.get("recipe")
        if recipe not in STATE_KEYS:
            errors.append(f"{where}: recipe must be one of {sorted(STATE_KEYS)}, got {recipe!r}")
            continue
        _unknown(where, st, COMMON_STATE_KEYS | STATE_KEYS[recipe], errors)
        weight = st.get("weight", 1.0)
        if not (isinstance(weight, (int, float)) and weight > 0):
            errors.append(f"{where}: weights must be positive (got {weight!r})")
        if recipe == "file":
            path = Path(st.get("path", ""))
            if not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                errors.append(f"{where}: file {str(path)!r} does not exist")
        if recipe == "mode" and geometry.get("kind") != "rectangle":
            errors.append(f"{where}: the 'mode' recipe needs a rectangle geometry")
        if st.get("band", "none") not in ("+", "-", "none"):
            errors.append(f"{where}: band must be '+', '-' or 'none'")
        out.append(dict(st))
    return out


def parse_config(text: str, command: Optional[str] = None, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every violation."""
    errors = []
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"not valid TOML: {exc}"]) from None
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    _unknown("the top level", raw, TOP_KEYS, errors)

    cmd = raw.get("command", command)
    if command is not None and raw.get("command", command) != command:
        errors.append(f"config command {raw['command']!r} does not match requested {command!r}")
    if cmd not in COMMANDS:
        errors.append(f"command must be one of {COMMANDS}, got {cmd!r}")

    geometry = _check_geometry(raw.get("geometry", {}), errors)
    states = _check_states(raw.get("states", []), geometry, base_dir, errors)
    if cmd in ("evolve", "contraction-probe") and not states:
        errors.append(f"{cmd} needs at least one [[states]] entry")

    evo = _section(raw, "evolution", EVOLUTION_KEYS, errors)
    if "snapshot_times" in evo:
        evo["snapshot_times"] = tuple(evo["snapshot_times"])
    evo["geometry"] = geometry["kind"]
    evolution = _build(EvolutionConfig, evo, "evolution", errors)
    picard = _build(PicardConfig, _section(raw, "picard", PICARD_KEYS, errors), "picard", errors)
    probe_kw = _section(raw, "probe", PROBE_KEYS, errors)
    if "T_values" in probe_kw:
        probe_kw["T_values"] = tuple(float(t) for t in probe_kw["T_values"])
        if not probe_kw["T_values"] or min(probe_kw["T_values"]) <= 0:
            errors.append("[probe] T_values must be a nonempty list of positive times")
    probe = _build(ProbeConfig, probe_kw, "probe", errors)
    if cmd == "contraction-probe" and not picard.s > 3.0 / 8.0:
        errors.append(f"[picard] s = {picard.s} is below the 3/8 threshold of the local well-posedness regime")
    if cmd == "evolve" and evolution.scheme == "picard_duhamel" and not picard.s > 3.0 / 8.0:
        errors.append(f"[picard] s = {picard.s} is below the 3/8 threshold of the local well-posedness regime")

    ver = _section(raw, "verify", VERIFY_KEYS, errors)
    verify = _build(VerifyConfig, ver, "verify", errors)
    if verify.name != "all" and verify.name not in HARNESS_DEFAULTS:
        errors.append(f"[verify] unknown harness {verify.name!r}; known: {sorted(HARNESS_DEFAULTS)}")
    elif verify.params:
        targets = HARNESS_DEFAULTS if verify.name == "all" else {verify.name: HARNESS_DEFAULTS[verify.name]}
        for key in verify.params:
            if not any(key in d for d in targets.values()):
                errors.append(f"unknown key {key!r} in [verify.params]")

    cx = _section(raw, "counterexample", COUNTEREXAMPLE_KEYS, errors)
    for key in ("s_values", "n_values"):
        if key in cx:
            cx[key] = tuple(cx[key])
    counterexample = _build(CounterexampleConfig, cx, "counterexample", errors)
    if any(int(n) < 1 for n in counterexample.n_values) or max(counterexample.n_values) >= counterexample.points:
        errors.append("[counterexample] need 1 <= N < points for every N")

    output = _section(raw, "output", OUTPUT_KEYS, errors)
    threads = raw.get("threads", 1)
    if not (isinstance(threads, int) and threads >= 1):
        errors.append("threads must be a positive integer")
    seed = raw.get("seed", 0)
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        errors.append("seed must be an unsigned 64-bit integer")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(cmd, geometry, states, evolution, picard, probe, verify, counterexample,
                            output.get("dir", "dhl-out"), threads, seed, raw, base_dir)


def load_config(path, command: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {str(path)!r}: {exc}"]) from None
    return parse_config(text, command, base_dir=path.parent)
