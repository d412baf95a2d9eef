"""Data model, distribution families, likelihoods and the two simulators.

Everything downstream (learners, perturbation engine, cross-validation)
consumes the :class:`Dataset` defined here and speaks the
:class:`Learner` / :class:`Predictor` contract.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-12

# True coefficients of the simulated mean structures:
# eta = b0 + b1*x1 + b2*x1^2 + b3*x2 + b4*x3*x4
GAUSSIAN_BETA = (-5.0, 5.0, -10.0, 10.0, 10.0)
GAUSSIAN_SIGMA = 1.0
# Only four coefficients are pinned for the Bernoulli design; the
# interaction coefficient mirrors the Gaussian one (documented choice).
BERNOULLI_BETA = (-6.66, 5.0, -10.0, 10.0, 10.0)


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, Family):
            return value
        return cls(str(value).lower())


class FitError(RuntimeError):
    """A learner failed to produce a usable fit."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix, response and family; immutable after construction."""

    X: np.ndarray
    y: np.ndarray
    family: Family
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("y length must equal the number of rows of X")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 observations")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite with no missing values")
        if self.family is Family.BERNOULLI:
            if not np.all((y == 0.0) | (y == 1.0)):
                raise ValueError("Bernoulli responses must be exactly 0 or 1")
            if y.min() == y.max():
                raise ValueError("Bernoulli data must contain both classes")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "family", Family.parse(self.family))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def with_response(self, y: np.ndarray) -> "Dataset":
        """Same covariates and family, new response (used by refits)."""
        return Dataset(self.X, np.asarray(y, dtype=float), self.family)


class Predictor:
    """Fitted state: a deterministic map from covariates to expectations.

    ``self_dof`` is the learner-reported effective degrees of freedom
    (``None`` when the learner has no notion of it); ``influence`` is the
    n x n smoother matrix for exact linear smoothers, else ``None``.
    """

    self_dof: float | None = None
    influence: np.ndarray | None = None
    warnings: tuple = ()

    def expectation(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Learner:
    """The fit contract every model implements.

    ``stochastic`` declares whether two fits with different seeds on
    identical data may differ; fits with identical (data, seed) are
    reproducible.
    """

    name: str = "learner"
    stochastic: bool = False

    def fit(self, data: Dataset, seed: int = 0) -> Predictor:
        raise NotImplementedError


def log_likelihood(y, mu, family: Family, sigma: float | None = None) -> float:
    """Log-likelihood of responses ``y`` at expectations ``mu``.

    Gaussian: the scale is the maximum-likelihood plug-in
    ``sigma^2 = mean((y - mu)^2)`` unless an explicit ``sigma`` is given
    (cross-validation passes the training-fold estimate). Bernoulli:
    ``mu`` is clamped into ``[EPS, 1-EPS]`` before taking logs.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if y.shape != mu.shape or y.ndim != 1 or y.size < 1:
        raise ValueError("y and mu must be 1-d vectors of equal length")
    family = Family.parse(family)
    if family is Family.BERNOULLI:
        mu = np.clip(mu, EPS, 1.0 - EPS)
        return float(np.sum(y * np.log(mu) + (1.0 - y) * np.log1p(-mu)))
    resid = y - mu
    if sigma is None:
        s2 = float(np.mean(resid**2))
        if s2 == 0.0:
            raise ValueError("degenerate sigma: all residuals are zero")
    else:
        if sigma <= 0.0:
            raise ValueError("sigma must be positive")
        s2 = float(sigma) ** 2
    n = y.size
    return float(-0.5 * n * np.log(2.0 * np.pi * s2) - np.sum(resid**2) / (2.0 * s2))


def gaussian_true_mean(X: np.ndarray) -> np.ndarray:
    """Conditional mean of the Gaussian simulator at covariates ``X``."""
    b0, b1, b2, b3, b4 = GAUSSIAN_BETA
    X = np.asarray(X, dtype=float)
    return b0 + b1 * X[:, 0] + b2 * X[:, 0] ** 2 + b3 * X[:, 1] + b4 * X[:, 2] * X[:, 3]


def bernoulli_true_prob(X: np.ndarray) -> np.ndarray:
    """Success probability of the Bernoulli simulator at covariates ``X``."""
    b0, b1, b2, b3, b4 = BERNOULLI_BETA
    X = np.asarray(X, dtype=float)
    eta = b0 + b1 * X[:, 0] + b2 * X[:, 0] ** 2 + b3 * X[:, 1] + b4 * X[:, 2] * X[:, 3]
    return 1.0 / (1.0 + np.exp(-eta))


def simulate_gaussian(n: int, seed: int) -> Dataset:
    """Simulated Gaussian data: four uniform covariates, unit noise."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 4))
    y = gaussian_true_mean(X) + rng.normal(0.0, GAUSSIAN_SIGMA, size=n)
    return Dataset(X, y, Family.GAUSSIAN, meta={"seed": seed})


def simulate_bernoulli(n: int, seed: int) -> Dataset:
    """Simulated binary data on the logit scale.

    If a draw happens to contain a single class, the draw is repeated
    with an incremented sub-seed and the retry count is recorded.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    retries = 0
    while True:
        rng = np.random.default_rng((seed, retries))
        X = rng.uniform(0.0, 1.0, size=(n, 4))
        y = (rng.uniform(size=n) < bernoulli_true_prob(X)).astype(float)
        if 0.0 < y.mean() < 1.0:
            return Dataset(X, y, Family.BERNOULLI,
                           meta={"seed": seed, "class_retries": retries})
        retries += 1
        if retries > 1000:
            raise RuntimeError("could not simulate both classes")
