import numpy as np
import pytest

from gdfcv import (Dataset, Family, PerturbationPlan, estimate_gdf,
                   gdf_cov_oracle, replicate_gdf, simulate_gaussian,
                   sweep_k, sweep_sigma)
from gdfcv.gdf import default_plan_settings, perturb_flip, perturb_gaussian
from gdfcv.learners import GlmLearner, design_expand


class TestPerturbOps:
    def test_gaussian_touches_only_idx(self):
        y = np.zeros(10)
        out = perturb_gaussian(y, np.array([2, 5]), 1.0,
                               np.random.default_rng(0))
        changed = np.nonzero(out != y)[0]
        assert set(changed) == {2, 5}

    def test_gaussian_noise_scale(self):
        rng = np.random.default_rng(1)
        y = np.zeros(200_000)
        out = perturb_gaussian(y, np.arange(y.size), 0.7, rng)
        assert out.std() == pytest.approx(0.7, rel=0.01)

    def test_gaussian_contract(self):
        with pytest.raises(ValueError):
            perturb_gaussian(np.zeros(5), np.array([1]), 0.0,
                             np.random.default_rng(0))
        with pytest.raises(ValueError):
            perturb_gaussian(np.zeros(5), np.array([], dtype=int), 1.0,
                             np.random.default_rng(0))
        with pytest.raises(ValueError):
            perturb_gaussian(np.zeros(5), np.array([5]), 1.0,
                             np.random.default_rng(0))

    def test_flip_example(self):
        y = np.array([0.0, 1.0, 1.0, 0.0])
        assert np.array_equal(perturb_flip(y, np.array([0, 2])),
                              [1.0, 1.0, 0.0, 0.0])

    def test_flip_involution(self):
        rng = np.random.default_rng(2)
        y = rng.integers(0, 2, 50).astype(float)
        idx = rng.choice(50, size=20, replace=False)
        assert np.array_equal(perturb_flip(perturb_flip(y, idx), idx), y)

    def test_flip_rejects_nonbinary(self):
        with pytest.raises(ValueError):
            perturb_flip(np.array([0.0, 0.5]), np.array([0]))


class TestPlan:
    @pytest.mark.parametrize("kwargs", [
        {"k": 0, "rounds": 10},
        {"k": 5, "rounds": 1},
        {"k": 5, "rounds": 10, "sigma_frac": 0.0},
        {"k": 5, "rounds": 10, "internal_reps": 0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            PerturbationPlan(**kwargs)

    def test_default_settings(self):
        s = default_plan_settings(Family.GAUSSIAN, "glm", 250)
        assert s == {"k": 250, "sigma_frac": 0.25}
        s = default_plan_settings(Family.GAUSSIAN, "spline", 250)
        assert s["k"] == 50
        s = default_plan_settings(Family.BERNOULLI, "glm", 300)
        assert s["k"] == 150
        s = default_plan_settings(Family.BERNOULLI, "boosted", 300)
        assert s["k"] == 12


class TestEstimator:
    def test_ols_single_point_recovers_trace_exactly(self):
        data = simulate_gaussian(80, seed=7)
        Z = design_expand(data.X).Z
        trace = np.trace(Z @ np.linalg.solve(Z.T @ Z, Z.T))
        plan = PerturbationPlan(k=1, rounds=2 * data.n, seed=3)
        est = estimate_gdf(GlmLearner(), data, plan)
        # linear smoother + per-datum regression => exact trace recovery
        assert est.gdf == pytest.approx(trace, abs=1e-8)
        assert est.gdf == pytest.approx(15.0, abs=1e-8)

    def test_gdf_is_sum_of_slopes(self):
        data = simulate_gaussian(60, seed=1)
        est = estimate_gdf(GlmLearner(), data, PerturbationPlan(60, 25, seed=2))
        assert est.gdf == pytest.approx(est.slopes.sum(), rel=1e-12)
        assert est.slopes.shape == (60,)

    def test_intercept_only_has_unit_complexity(self):
        data = simulate_gaussian(50, seed=4)
        est = estimate_gdf(GlmLearner(mode="intercept"), data,
                           PerturbationPlan(1, 100, seed=5))
        assert est.gdf == pytest.approx(1.0, abs=1e-8)

    def test_noise_scale_robustness(self):
        data = simulate_gaussian(120, seed=9)
        Z = design_expand(data.X).Z
        trace = np.trace(Z @ np.linalg.solve(Z.T @ Z, Z.T))
        for sf in (0.125, 0.25, 0.5):
            est = estimate_gdf(GlmLearner(), data,
                               PerturbationPlan(120, 30, sigma_frac=sf, seed=11))
            assert est.gdf == pytest.approx(trace, rel=0.15)

    def test_eval_accounting(self):
        data = simulate_gaussian(50, seed=4)
        est = estimate_gdf(GlmLearner(), data,
                           PerturbationPlan(50, 20, internal_reps=3, seed=5))
        assert est.perturb_evals == 60
        assert est.baseline_evals == 1  # deterministic learner
        assert est.model_evals == 61

    def test_k_exceeding_n(self):
        data = simulate_gaussian(30, seed=4)
        with pytest.raises(ValueError, match="k cannot exceed n"):
            estimate_gdf(GlmLearner(), data, PerturbationPlan(31, 10))

    def test_flip_requires_unperturbed_rounds(self):
        x = np.linspace(0, 1, 40)[:, None]
        y = (np.arange(40) % 2).astype(float)
        data = Dataset(x, y, Family.BERNOULLI)
        with pytest.raises(ValueError, match="k < n"):
            estimate_gdf(GlmLearner(mode="intercept"), data,
                         PerturbationPlan(40, 10))

    def test_coverage_error_mentions_rounds(self):
        data = simulate_gaussian(100, seed=4)
        with pytest.raises(ValueError, match="increase rounds"):
            estimate_gdf(GlmLearner(), data, PerturbationPlan(1, 5))

    def test_seed_reproducibility(self):
        data = simulate_gaussian(60, seed=1)
        a = estimate_gdf(GlmLearner(), data, PerturbationPlan(60, 20, seed=8))
        b = estimate_gdf(GlmLearner(), data, PerturbationPlan(60, 20, seed=8))
        assert a.gdf == b.gdf

    def test_replicates_are_independent(self):
        data = simulate_gaussian(60, seed=1)
        ests = replicate_gdf(GlmLearner(), data,
                             PerturbationPlan(60, 20, seed=8), replicates=3)
        vals = [e.gdf for e in ests]
        assert len(set(vals)) == 3


class TestCovOracle:
    def test_ols_matches_trace(self):
        data = simulate_gaussian(80, seed=3)
        Z = design_expand(data.X).Z
        trace = np.trace(Z @ np.linalg.solve(Z.T @ Z, Z.T))
        # the generator mean is irrelevant for a linear smoother
        value, se, m = gdf_cov_oracle(GlmLearner(), data.X,
                                      np.zeros(data.n), 1.0, 400, seed=1)
        assert m == 400
        assert abs(value - trace) < 3 * se
        assert se < 1.5

    def test_rejects_tiny_budget(self):
        data = simulate_gaussian(40, seed=3)
        with pytest.raises(ValueError):
            gdf_cov_oracle(GlmLearner(), data.X, np.zeros(40), 1.0, 50)


class TestSweeps:
    def test_sweep_k_shape(self):
        data = simulate_gaussian(60, seed=2)
        df = sweep_k(GlmLearner(), data, [20, 60], reps=2, rounds=20, seed=3)
        assert list(df.columns) == ["k", "replicate", "gdf", "model_evals",
                                    "dropped_rounds"]
        assert len(df) == 4
        assert sorted(df["k"].unique()) == [20, 60]

    def test_sweep_k_bounds(self):
        data = simulate_gaussian(60, seed=2)
        with pytest.raises(ValueError):
            sweep_k(GlmLearner(), data, [0], reps=1, rounds=10)

    def test_sweep_sigma_shape(self):
        data = simulate_gaussian(60, seed=2)
        df = sweep_sigma(GlmLearner(), data, [0.125, 0.5], reps=2, k=60,
                         rounds=20, seed=3)
        assert len(df) == 4
        assert set(df["sigma_frac"].unique()) == {0.125, 0.5}

    def test_sweep_sigma_gaussian_only(self):
        x = np.linspace(0, 1, 30)[:, None]
        y = (np.arange(30) % 2).astype(float)
        data = Dataset(x, y, Family.BERNOULLI)
        with pytest.raises(ValueError, match="Gaussian"):
            sweep_sigma(GlmLearner(mode="intercept"), data, [0.25], reps=1,
                        k=10, rounds=10)
