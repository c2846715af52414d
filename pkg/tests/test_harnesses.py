import json

import numpy as np
import pytest

from dirac_hartree import harnesses as H
from dirac_hartree.dirichlet import DirichletBasis
from dirac_hartree.fields import Grid2D
from dirac_hartree.norms import AdmissibleTriple, lp_norm

TRIPLE = AdmissibleTriple.from_r(4)


@pytest.fixture(scope="module")
def torus():
    return Grid2D(np.pi, 32)


@pytest.fixture(scope="module")
def sample(torus):
    return H.random_mixture(torus, np.random.default_rng(1), 2)


class TestSamples:
    def test_band_limit_and_normalization(self, torus):
        u = H.random_band_limited(torus, np.random.default_rng(0))
        assert np.vdot(u, u).real * torus.cell_area == pytest.approx(1.0)
        hat = np.fft.fft2(u)
        k = np.fft.fftfreq(32, 1 / 32)
        kk = np.hypot(*np.meshgrid(k, k, indexing="ij"))
        assert np.max(np.abs(hat[:, kk > 4])) < 1e-12 * np.max(np.abs(hat))

    def test_reproducible(self, torus):
        a = H.random_mixture(torus, np.random.default_rng(5))
        b = H.random_mixture(torus, np.random.default_rng(5))
        np.testing.assert_array_equal(a[0], b[0])


class TestStrichartz:
    def test_zero_gives_zero(self, torus):
        assert H.strichartz_ratio(np.zeros((1, 2, 32, 32)), [1.0], torus, TRIPLE, 1.0) == 0.0

    def test_single_state_reproduces_scalar_ratio(self, torus, sample):
        stack, _ = sample
        mixed = H.strichartz_ratio(stack[:1], [1.0], torus, TRIPLE, 1.0, nodes=16)
        single = H.strichartz_ratio(stack[0], None, torus, TRIPLE, 1.0, nodes=16)
        assert mixed == single

    def test_weight_scale_invariance(self, torus, sample):
        stack, w = sample
        a = H.strichartz_ratio(stack, w, torus, TRIPLE, 1.0, nodes=16)
        b = H.strichartz_ratio(stack, 7 * w, torus, TRIPLE, 1.0, nodes=16)
        assert a == pytest.approx(b, rel=1e-12)

    def test_translation_invariance(self, torus, sample):
        stack, w = sample
        shifted = np.roll(stack, (5, -3), axis=(-2, -1))
        a = H.strichartz_ratio(stack, w, torus, TRIPLE, 1.0, nodes=16)
        assert H.strichartz_ratio(shifted, w, torus, TRIPLE, 1.0, nodes=16) == pytest.approx(a, rel=1e-10)

    def test_small_harness_run(self):
        rep = H.strichartz_harness(TRIPLE, 0.5, 3, 42, N=32, nodes=16)
        assert len(rep.ratios) == 3 and np.isfinite(rep.max_ratio)
        assert "stability" in rep.extra and "doubling_stable" in rep.checks


class TestDuhamel:
    def test_translation_invariance(self, torus):
        rng = np.random.default_rng(2)
        a, w = H.random_mixture(torus, rng, 2)
        b, _ = H.random_mixture(torus, rng, 2)
        om = np.array([0.7, 1.3])
        r1 = H.duhamel_ratio(a, b, om, w, torus, TRIPLE, TRIPLE, 1.0)
        r2 = H.duhamel_ratio(np.roll(a, 4, -1), np.roll(b, 4, -1), om, w, torus, TRIPLE, TRIPLE, 1.0)
        assert r1 == pytest.approx(r2, rel=1e-10)

    def test_zero_forcing_skipped(self, torus):
        z = np.zeros((1, 2, 32, 32), complex)
        assert H.duhamel_ratio(z, z, [1.0], [1.0], torus, TRIPLE, TRIPLE, 1.0) is None


class TestHardy:
    def gaussian(self, grid, w, centre=(0.0, 0.0)):
        x1, x2 = grid.mesh()
        env = np.exp(-((x1 - centre[0]) ** 2 + (x2 - centre[1]) ** 2) / (2 * w**2))
        return np.stack([env, 0 * env]).astype(complex)

    def test_zero_skipped(self, torus):
        assert H.hardy_ratio(np.zeros((2, 32, 32)), torus) is None

    def test_scale_invariance(self):
        g = Grid2D(16.0, 256)
        a = H.hardy_ratio(self.gaussian(g, 1.0), g)
        b = H.hardy_ratio(self.gaussian(g, 2.0), g)
        assert abs(a - b) / b < 0.10

    def test_translation_invariance(self):
        g = Grid2D(16.0, 128)
        u = self.gaussian(g, 1.5, (0.3, -0.2))
        assert H.hardy_ratio(np.roll(u, (7, 11), axis=(-2, -1)), g) == pytest.approx(H.hardy_ratio(u, g), rel=1e-10)

    def test_kernel_origin_cell(self):
        g = Grid2D(1.0, 8)
        k = H._hardy_kernel(g)
        assert k[0, 0] == pytest.approx(4 * g.spacing * np.log(1 + np.sqrt(2)))
        assert k[1, 0] == pytest.approx(g.cell_area / g.spacing)


class TestNonlinear:
    @pytest.mark.parametrize("c", [0.1, 10.0])
    def test_cubic_homogeneity(self, torus, sample, c):
        stack, w = sample
        assert H.nonlinear_ratio(c * stack, w, torus, 0.5) == pytest.approx(H.nonlinear_ratio(stack, w, torus, 0.5), rel=1e-10)

    def test_zero_skipped(self, torus):
        assert H.nonlinear_ratio(np.zeros((1, 2, 32, 32)), [1.0], torus, 0.5) is None

    def test_translation_invariance(self, torus, sample):
        stack, w = sample
        moved = np.roll(stack, (3, 9), axis=(-2, -1))
        assert H.nonlinear_ratio(moved, w, torus, 0.5) == pytest.approx(H.nonlinear_ratio(stack, w, torus, 0.5), rel=1e-10)

    def test_regime(self):
        with pytest.raises(ValueError):
            H.nonlinear_bound_harness(0.4, 2, 0)


@pytest.fixture(scope="module")
def basis():
    return DirichletBasis.rectangle(np.pi, np.pi, 32, 64)


class TestProducts:
    @pytest.mark.parametrize("case,s,sigma", [("prod1", 0.0, 1.0), ("prod1", 2.5, 3.0), ("prod1", 1.5, 1.2),
                                              ("prod1", 1.0, 1.0), ("prod2", 0.4, None), ("prod2", 1.0, None),
                                              ("prod3", 0.5, None)])
    def test_precondition_errors(self, basis, case, s, sigma):
        with pytest.raises(ValueError):
            H.product_ratio(case, np.ones(basis.grid.shape), np.ones(basis.grid.shape), basis, s, sigma)

    def test_linear_in_v(self, basis):
        u = H.random_dirichlet_scalar(basis, np.random.default_rng(0))
        e11 = basis.eigenfunction(1, 1)
        ratios = [H.product_ratio("prod1", u, eps * e11, basis, 1.5, 2.5) for eps in (1.0, 1e-3, 1e-6)]
        assert max(ratios) - min(ratios) <= 1e-9 * ratios[0]

    def test_prod2_against_l4_chain(self, basis):
        rng = np.random.default_rng(4)
        area = basis.grid.cell_area
        for _ in range(5):
            u, v = H.random_dirichlet_scalar(basis, rng), H.random_dirichlet_scalar(basis, rng)
            c = basis.forward(u * v)
            lhs = np.sqrt(np.sum(c**2))
            assert lhs <= lp_norm(u, area, 4) * lp_norm(v, area, 4) * (1 + 1e-12)


class TestReports:
    def report(self, ratios=(0.5, None, 1.0)):
        return H.RatioReport("demo", "unit", list(ratios), 3, {"harness": "demo", "seed": 3})

    def test_csv_and_summary(self):
        rep = self.report()
        lines = rep.to_csv().splitlines()
        assert lines[0] == f"# config_hash: {rep.config_hash}"
        assert lines[3:] == ["sample_index,ratio", "0,0.5", "1,skipped", "2,1"]
        summary = json.loads(rep.summary_json())
        for key in ("name", "max_ratio", "budget", "verdict", "seed", "config_hash"):
            assert key in summary
        assert summary["verdict"] == "UNFROZEN" and summary["skipped"] == 1

    def test_rejects_negative_or_nan(self):
        with pytest.raises(ValueError):
            self.report([0.1, -1.0])
        with pytest.raises(ValueError):
            self.report([np.nan])

    def test_verdict_uses_budget_and_checks(self):
        rep = self.report()
        rep.budget = 1.2
        assert rep.verdict == "PASS"
        rep.checks["stable"] = False
        assert rep.verdict == "FAIL"
        rep.checks["stable"] = True
        rep.budget = 0.9
        assert rep.verdict == "FAIL"

    def test_freeze_requires_flag_and_hash_check(self, tmp_path):
        rep = self.report()
        with pytest.raises(PermissionError):
            H.freeze_fixture(rep, tmp_path)
        assert not list(tmp_path.iterdir())
        fx = H.freeze_fixture(rep, tmp_path, allow=True)
        assert fx["budget"] == pytest.approx(1.5)
        again = self.report()
        H.apply_fixture(again, tmp_path)
        assert again.verdict == "PASS"
        other = H.RatioReport("demo", "unit", [0.5], 4, {"harness": "demo", "seed": 4})
        with pytest.raises(H.FixtureMismatch):
            H.apply_fixture(other, tmp_path)
        with pytest.raises(H.FixtureMismatch):
            H.apply_fixture(H.RatioReport("missing", "", [], 0, {}), tmp_path)


class TestDrivers:
    def test_unknown_harness_and_parameter(self):
        with pytest.raises(KeyError):
            H.harness_config("poincare")
        with pytest.raises(KeyError):
            H.harness_config("hardy", {"bogus": 1})

    def test_threads_do_not_change_results(self):
        a = H.run_harness("nonlinear", {"samples": 6})
        b = H.run_harness("nonlinear", {"samples": 6}, workers=3)
        assert a.to_csv() == b.to_csv()

    @pytest.mark.parametrize("name", ["hardy", "nonlinear", "prod1", "prod2", "besov-equivalence"])
    def test_frozen_fixture_verdicts(self, name):
        rep = H.apply_fixture(H.run_harness(name))
        assert rep.verdict == "PASS"

    def test_besov_equivalence_bracket(self):
        rep = H.apply_fixture(H.run_harness("besov-equivalence"))
        c = rep.budget
        assert 1 / c <= rep.extra["min_ratio"] and rep.extra["max_ratio"] <= c
