import csv
import json
from pathlib import Path

import numpy as np
import pytest

from dirac_hartree.cli import EXIT_ABORT, EXIT_CONFIG, EXIT_OK, EXIT_VERDICT, build_initial_state, main
from dirac_hartree.config import ConfigError, load_config, parse_config
from dirac_hartree.fields import Grid2D, gaussian_packet, write_field

MINIMAL = """
command = "evolve"
[geometry]
kind = "torus"
L = 3.141592653589793
N = 16
[[states]]
recipe = "gaussian"
width = 0.8
"""

PROBE = """
command = "contraction-probe"
[geometry]
L = 3.141592653589793
N = 16
[[states]]
recipe = "gaussian"
width = 0.6
amplitude = 2.0
momentum = [1.0, 0.0]
[picard]
s = {s}
quadrature_substeps = 20
[probe]
T_values = [0.05, 0.1]
"""


def write(tmp_path: Path, text: str, name="run.toml") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.evolution.dt == 1e-3 and cfg.evolution.scheme == "strang"
        assert cfg.states[0]["recipe"] == "gaussian" and cfg.threads == 1

    def test_zero_weight(self):
        with pytest.raises(ConfigError, match="weights must be positive"):
            parse_config(MINIMAL + "weight = 0.0\n")

    def test_probe_below_threshold(self):
        with pytest.raises(ConfigError, match="3/8"):
            parse_config(PROBE.format(s=0.3))
        assert parse_config(PROBE.format(s=0.5)).picard.s == 0.5

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="'colour'"):
            parse_config(MINIMAL.replace("[geometry]", "[geometry]\ncolour = 1"))

    def test_all_errors_collected(self):
        text = MINIMAL.replace("N = 16", "N = 12") + "weight = -1\nbogus = 2\n[evolution]\ndt = -1.0\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        errs = info.value.errors
        assert len(errs) >= 4
        assert any("power of two" in e for e in errs) and any("'bogus'" in e for e in errs)
        assert any("weights must be positive" in e for e in errs) and any("dt must be positive" in e for e in errs)

    def test_missing_file(self, tmp_path):
        text = MINIMAL.replace('recipe = "gaussian"\nwidth = 0.8', 'recipe = "file"\npath = "nope.dhl"')
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(text, base_dir=tmp_path)

    def test_command_mismatch_and_unknown_harness(self):
        with pytest.raises(ConfigError, match="does not match"):
            parse_config(MINIMAL, command="verify")
        with pytest.raises(ConfigError, match="unknown harness"):
            parse_config('command = "verify"\n[verify]\nname = "poincare"\n')
        with pytest.raises(ConfigError, match="verify.params"):
            parse_config('command = "verify"\n[verify]\nname = "hardy"\n[verify.params]\nwidth = 2\n')

    def test_not_toml(self):
        with pytest.raises(ConfigError, match="TOML"):
            parse_config("command = ")

    def test_rectangle_default_is_full_basis(self):
        cfg = parse_config(MINIMAL.replace('kind = "torus"\nL = 3.141592653589793\nN = 16', 'kind = "rectangle"\nintervals = 32'))
        assert cfg.geometry["modes"] == 31

    def test_threads_env(self, monkeypatch):
        cfg = parse_config(MINIMAL + "\n")
        monkeypatch.setenv("DHL_THREADS", "3")
        assert cfg.workers() == 3


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "scripts" / "configs").glob("*.toml")),
                         ids=lambda p: p.stem)
def test_example_configs_parse(path):
    cfg = load_config(path)
    if cfg.command in ("evolve", "contraction-probe"):
        state, _ = build_initial_state(cfg)
        assert len(state.states) == len(cfg.states)


class TestInitialState:
    def test_file_recipe_round_trip(self, tmp_path):
        g = Grid2D(np.pi, 16)
        psi = gaussian_packet(g, (0.1, 0.0), 0.7, (1, 0), (1, 1j), 1.0)
        with open(tmp_path / "psi.dhl", "wb") as fh:
            write_field(fh, psi)
        text = MINIMAL.replace('recipe = "gaussian"\nwidth = 0.8', 'recipe = "file"\npath = "psi.dhl"\nweight = 2.0')
        state, _ = build_initial_state(load_config(write(tmp_path, text)))
        np.testing.assert_array_equal(state.states[0].values, psi.values)
        assert state.weights[0] == 2.0

    def test_band_projection(self, tmp_path):
        from dirac_hartree.propagator import apply_band_projector
        state, _ = build_initial_state(parse_config(MINIMAL + 'band = "+"\n'))
        psi = state.states[0]
        # Pi_-(0) = I/2, so only the nonzero modes are annihilated
        hat = np.fft.fft2(apply_band_projector(-1, psi).values)
        hat[:, 0, 0] = 0
        assert np.max(np.abs(hat)) < 1e-14 * np.max(np.abs(np.fft.fft2(psi.values)))

    def test_random_recipe_depends_on_seed(self):
        text = MINIMAL.replace('recipe = "gaussian"\nwidth = 0.8', 'recipe = "random"')
        a = build_initial_state(parse_config(text))[0].states[0].values
        b = build_initial_state(parse_config("seed = 1\n" + text))[0].states[0].values
        assert not np.allclose(a, b)


class TestRun:
    def test_evolve_outputs(self, tmp_path):
        code = main(["evolve", "--config", write(tmp_path, MINIMAL + "[evolution]\nT = 0.02\nsnapshot_times = [0.01]\n"),
                     "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        out = tmp_path / "out"
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert lines[0].startswith("# config_hash: ")
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "ok" and summary["config_hash"] in lines[0]
        assert (out / "snapshot_t0.01_state0.dhl").is_file()

    def test_free_field_energy_constant(self, tmp_path):
        text = MINIMAL + 'amplitude = 3.0\nmomentum = [1.0, 0.5]\nspinor = [1.0, 1.0]\n[evolution]\nT = 0.2\ndt = 0.01\ndiagnostics_every = 1\n'
        out = tmp_path / "out"
        assert main(["evolve", "--config", write(tmp_path, text), "--out", str(out), "--free-field"]) == EXIT_OK
        rows = [r for r in csv.reader(l for l in (out / "diagnostics.csv").read_text().splitlines() if not l.startswith("#"))]
        col = rows[0].index("E")
        energies = np.array([float(r[col]) for r in rows[1:]])
        assert abs(energies[0]) > 0.1
        assert np.max(np.abs(energies - energies[0])) <= 1e-12 * abs(energies[0])

    def test_config_error_exit(self, tmp_path, capsys):
        assert main(["evolve", "--config", write(tmp_path, MINIMAL + "weight = 0\n")]) == EXIT_CONFIG
        assert "weights must be positive" in capsys.readouterr().err
        assert main(["evolve", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG

    def test_numerical_abort_exit(self, tmp_path):
        text = (MINIMAL + 'amplitude = 40.0\n[evolution]\nscheme = "picard_duhamel"\nT = 1.0\ndt = 0.01\n'
                "[picard]\nmax_iters = 10\n")
        out = tmp_path / "out"
        assert main(["evolve", "--config", write(tmp_path, text), "--out", str(out)]) == EXIT_ABORT
        failure = json.loads((out / "failure.json").read_text())
        assert failure["exit_code"] == EXIT_ABORT and failure["last_diagnostics"]["t"] == 0.0

    def test_probe_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["contraction-probe", "--config", write(tmp_path, PROBE.format(s=0.5)), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["t_star"] == 0.1
        assert (out / "contraction.csv").read_text().splitlines()[2] == "T,iteration,distance,ratio"

    def test_verify_deterministic_and_seed_mismatch(self, tmp_path):
        cfg = write(tmp_path, 'command = "verify"\n')
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert main(["verify", "hardy", "--config", cfg, "--out", str(out)]) == EXIT_OK
        for name in ("hardy_ratios.csv", "hardy_summary.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        assert main(["verify", "hardy", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "8"]) == EXIT_VERDICT
        assert json.loads((tmp_path / "c" / "failure.json").read_text())["exit_code"] == EXIT_VERDICT

    def test_verify_budget_failure(self, tmp_path):
        # a fixture budget below the observed ratios must fail the verdict
        fixtures = tmp_path / "fx"
        fixtures.mkdir()
        cfg = write(tmp_path, 'command = "verify"\n[verify]\nname = "nonlinear"\nfixture_dir = "fx"\n[verify.params]\nsamples = 4\n')
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "a"), "--freeze-fixtures"]) == EXIT_OK
        fx = fixtures / "nonlinear.json"
        data = json.loads(fx.read_text())
        data["budget"] = data["max_ratio"] / 2
        fx.write_text(json.dumps(data))
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_VERDICT

    def test_name_only_for_verify(self, tmp_path):
        assert main(["evolve", "hardy", "--config", write(tmp_path, MINIMAL)]) == EXIT_CONFIG

    def test_counterexample_outputs(self, tmp_path):
        text = 'command = "counterexample"\n[counterexample]\nn_values = [10, 100, 1000]\npoints = 16384\n'
        out = tmp_path / "out"
        assert main(["counterexample", "--config", write(tmp_path, text), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        inc = summary["decade_increments"]["2.5"]
        assert [n for n, _ in inc] == [100, 1000]
        assert inc[1][1] == pytest.approx(inc[0][1], rel=0.05)
        assert "N,s,S_N" in (out / "divergence.csv").read_text()
