"""Learner #1: OLS / logistic regression on the expanded design."""

from __future__ import annotations

import numpy as np

from ..core import Dataset, Family, FitError, Learner, Predictor
from .design import design_expand

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 50
COEF_DIVERGENCE_NORM = 1e6


def _build_design(X: np.ndarray, mode: str,
                  require_determined: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if mode == "expand":
        return design_expand(X, require_determined=require_determined).Z
    if mode == "linear":
        return np.column_stack([np.ones(X.shape[0]), X])
    if mode == "intercept":
        return np.ones((X.shape[0], 1))
    raise ValueError(f"unknown design mode {mode!r}")


class GlmPredictor(Predictor):
    def __init__(self, beta, family, mode, influence=None, warnings=()):
        self.beta = np.asarray(beta, dtype=float)
        self.family = family
        self.mode = mode
        self.self_dof = float(self.beta.size)
        self.influence = influence
        self.warnings = tuple(warnings)

    def expectation(self, X: np.ndarray) -> np.ndarray:
        eta = _build_design(X, self.mode) @ self.beta
        if self.family is Family.BERNOULLI:
            return 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
        return eta


class GlmLearner(Learner):
    """OLS (Gaussian) or IRLS logistic regression (Bernoulli).

    ``expand=True`` fits the quadratic + first-order-interaction design;
    ``mode="intercept"`` gives the constant benchmark model.
    """

    stochastic = False

    def __init__(self, expand: bool = True, mode: str | None = None):
        self.mode = mode if mode is not None else ("expand" if expand else "linear")
        self.name = "glm"

    def fit(self, data: Dataset, seed: int = 0) -> GlmPredictor:
        Z = _build_design(data.X, self.mode, require_determined=True)
        n, p = Z.shape
        if np.linalg.matrix_rank(Z) < p:
            raise FitError("rank-deficient design")
        if data.family is Family.GAUSSIAN:
            beta, *_ = np.linalg.lstsq(Z, data.y, rcond=None)
            influence = Z @ np.linalg.solve(Z.T @ Z, Z.T)
            return GlmPredictor(beta, data.family, self.mode, influence)
        beta, warns = _irls_logistic(Z, data.y)
        return GlmPredictor(beta, data.family, self.mode, warnings=warns)


def _irls_logistic(Z: np.ndarray, y: np.ndarray):
    n, p = Z.shape
    beta = np.zeros(p)
    for _ in range(IRLS_MAX_ITER):
        eta = np.clip(Z @ beta, -30, 30)
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        z = eta + (y - mu) / w
        Zw = Z * w[:, None]
        try:
            beta_new = np.linalg.solve(Z.T @ Zw, Zw.T @ z)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular IRLS system") from exc
        step = np.max(np.abs(beta_new - beta))
        beta = beta_new
        if np.linalg.norm(beta) > COEF_DIVERGENCE_NORM:
            raise FitError("no finite MLE (separation)")
        if step < IRLS_TOL:
            # With eta bounded, a separated fit can stall instead of
            # diverging; a perfectly classified sample means the same thing.
            if np.max(np.abs(y - mu)) < 1e-4:
                raise FitError("no finite MLE (separation)")
            return beta, ()
    if np.linalg.norm(beta) > COEF_DIVERGENCE_NORM:
        raise FitError("no finite MLE (separation)")
    return beta, ("irls_not_converged",)
