import numpy as np
import pytest
from scipy import stats

from gdfcv import (Dataset, Family, log_likelihood, simulate_bernoulli,
                   simulate_gaussian)
from gdfcv.core import bernoulli_true_prob, gaussian_true_mean
from gdfcv.learners import design_expand


class TestLogLikelihood:
    def test_bernoulli_perfect_prediction(self):
        assert log_likelihood([1.0], [1.0 - 1e-12], Family.BERNOULLI) == pytest.approx(0.0, abs=1e-10)

    def test_bernoulli_coin_flip(self):
        ll = log_likelihood([1.0, 0.0], [0.5, 0.5], Family.BERNOULLI)
        assert ll == pytest.approx(2 * np.log(0.5), abs=1e-12)

    def test_gaussian_ml_plugin(self):
        # oracle: evaluate the normal density directly at sigma = sqrt(0.5)
        y = np.array([0.0, 1.0])
        mu = np.array([0.0, 0.0])
        expected = stats.norm.logpdf(y, loc=mu, scale=np.sqrt(0.5)).sum()
        assert log_likelihood(y, mu, Family.GAUSSIAN) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-2.14473, abs=1e-5)

    def test_explicit_sigma(self):
        y = np.array([0.0, 1.0, 2.0])
        mu = np.array([0.5, 0.5, 0.5])
        expected = stats.norm.logpdf(y, loc=mu, scale=0.7).sum()
        assert log_likelihood(y, mu, Family.GAUSSIAN, sigma=0.7) == pytest.approx(expected)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            log_likelihood([1.0, 2.0], [1.0], Family.GAUSSIAN)

    def test_degenerate_sigma(self):
        with pytest.raises(ValueError, match="degenerate sigma"):
            log_likelihood([1.0, 2.0], [1.0, 2.0], Family.GAUSSIAN)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=20)
        mu = rng.normal(size=20)
        perm = rng.permutation(20)
        for fam, yy in [(Family.GAUSSIAN, y),
                        (Family.BERNOULLI, (y > 0).astype(float))]:
            muu = mu if fam is Family.GAUSSIAN else 1 / (1 + np.exp(-mu))
            assert log_likelihood(yy, muu, fam) == pytest.approx(
                log_likelihood(yy[perm], muu[perm], fam))

    def test_bernoulli_maximized_at_prevalence(self):
        y = np.array([1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0])
        grid = np.linspace(0.01, 0.99, 99)
        lls = [log_likelihood(y, np.full(y.size, p), Family.BERNOULLI)
               for p in grid]
        assert grid[int(np.argmax(lls))] == pytest.approx(y.mean(), abs=0.01)


class TestDataset:
    def test_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((3, 2)), np.array([1.0, 2.0]), Family.GAUSSIAN)
        with pytest.raises(ValueError):
            Dataset(np.ones((3, 2)), np.array([0.0, 2.0, 1.0]), Family.BERNOULLI)
        with pytest.raises(ValueError):
            Dataset(np.ones((3, 2)), np.array([1.0, 1.0, 1.0]), Family.BERNOULLI)

    def test_with_response(self, gauss60):
        d2 = gauss60.with_response(gauss60.y + 1)
        assert np.array_equal(d2.X, gauss60.X)
        assert np.allclose(d2.y, gauss60.y + 1)


class TestSimulators:
    def test_gaussian_deterministic(self):
        a, b = simulate_gaussian(50, 7), simulate_gaussian(50, 7)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_gaussian_intercept(self):
        assert gaussian_true_mean(np.zeros((1, 4)))[0] == pytest.approx(-5.0)

    def test_gaussian_coverage(self):
        # each true coefficient covered by its 95% CI in >= 90 of 100 seeds
        # (true expanded-coordinate beta: intercept -5, x1 5, x2 10,
        # x1^2 -10, x3*x4 10, everything else 0)
        true = np.zeros(15)
        names_to_val = {"1": -5.0, "x1": 5.0, "x2": 10.0, "x1^2": -10.0,
                        "x3*x4": 10.0}
        hits = np.zeros(15)
        for seed in range(100):
            data = simulate_gaussian(250, seed)
            dm = design_expand(data.X)
            for j, name in enumerate(dm.column_names):
                true[j] = names_to_val.get(name, 0.0)
            Z = dm.Z
            n, p = Z.shape
            beta = np.linalg.lstsq(Z, data.y, rcond=None)[0]
            resid = data.y - Z @ beta
            s2 = resid @ resid / (n - p)
            se = np.sqrt(s2 * np.diag(np.linalg.inv(Z.T @ Z)))
            tcrit = stats.t.ppf(0.975, n - p)
            hits += (np.abs(beta - true) <= tcrit * se)
        assert np.all(hits >= 90)

    def test_bernoulli_deterministic_and_binary(self):
        a, b = simulate_bernoulli(60, 5), simulate_bernoulli(60, 5)
        assert np.array_equal(a.y, b.y)
        assert set(np.unique(a.y)) <= {0.0, 1.0}

    def test_bernoulli_prevalence_matches_linear_predictor(self):
        # Monte-Carlo oracle for E[logit^-1(eta)] over the covariate law
        rng = np.random.default_rng(123)
        target = bernoulli_true_prob(rng.uniform(size=(1_000_000, 4))).mean()
        prev = np.mean([simulate_bernoulli(300, s).y.mean()
                        for s in range(100)])
        assert prev == pytest.approx(target, abs=0.02)
