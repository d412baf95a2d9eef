"""Polynomial/interaction design expansion and exact hat-matrix oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DesignMatrix:
    """Expanded feature matrix; first column is the intercept."""

    Z: np.ndarray
    column_names: tuple

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class LinearSmoother:
    """The n x n map from observed responses to fitted values."""

    influence: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.influence))


def design_expand(X: np.ndarray, require_determined: bool = True) -> DesignMatrix:
    """Intercept, linear, squared and pairwise-product columns.

    Column order is deterministic: intercept, x1..xd, x1^2..xd^2, then
    products x_i*x_j for i < j in lexicographic index order, giving
    p = 1 + 2d + d(d-1)/2 columns. ``require_determined=False`` skips
    the n >= p check (prediction-time designs can be any height).
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if d < 1:
        raise ValueError("need at least one covariate")
    cols = [np.ones(n)]
    names = ["1"]
    for j in range(d):
        cols.append(X[:, j])
        names.append(f"x{j + 1}")
    for j in range(d):
        cols.append(X[:, j] ** 2)
        names.append(f"x{j + 1}^2")
    for i in range(d):
        for j in range(i + 1, d):
            cols.append(X[:, i] * X[:, j])
            names.append(f"x{i + 1}*x{j + 1}")
    Z = np.column_stack(cols)
    if require_determined and n < Z.shape[1]:
        raise ValueError("underdetermined design: n < p after expansion")
    return DesignMatrix(Z, tuple(names))


def hat_matrix(Z: np.ndarray, penalty: np.ndarray | None = None,
               lam: float = 0.0) -> tuple[LinearSmoother, float]:
    """Influence matrix Z (Z'Z + lam*S)^-1 Z' and its trace."""
    Z = np.asarray(Z, dtype=float)
    A = Z.T @ Z
    if penalty is not None:
        A = A + lam * np.asarray(penalty, dtype=float)
    try:
        B = np.linalg.solve(A, Z.T)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular system in hat matrix") from exc
    # solve() can succeed on numerically singular systems; reject those too
    if not np.allclose(A @ B, Z.T, atol=1e-6 * max(1.0, np.abs(Z).max())):
        raise ValueError("singular system in hat matrix")
    smoother = LinearSmoother(Z @ B)
    return smoother, smoother.trace
