"""Learner #4: gradient-boosted trees with shrinkage and subsampling."""

from __future__ import annotations

import numpy as np

from ..core import EPS, Dataset, Family, Learner, Predictor
from .trees import Tree, build_tree


class BoostedTreesPredictor(Predictor):
    def __init__(self, f0, trees, scaled_leaf_values, family, train_loss):
        self.f0 = f0
        self.trees = trees
        self.scaled_leaf_values = scaled_leaf_values
        self.family = family
        self.train_loss = np.asarray(train_loss)  # per-iteration deviance
        self.self_dof = None

    def expectation(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.full(X.shape[0], self.f0)
        for tree, values in zip(self.trees, self.scaled_leaf_values):
            F += values[tree.apply(X)]
        if self.family is Family.BERNOULLI:
            return np.clip(1.0 / (1.0 + np.exp(-F)), EPS, 1.0 - EPS)
        return F


class BoostedTreesLearner(Learner):
    """Squared-error (Gaussian) / Bernoulli-deviance boosting.

    Trees are fitted to the negative gradient on a random subsample per
    iteration; Bernoulli leaf values take a single Newton step. With
    ``subsample=1.0`` the procedure is deterministic.
    """

    def __init__(self, n_iter: int = 3000, depth: int = 3,
                 shrinkage: float = 0.001, subsample: float = 0.5,
                 min_node: int = 10):
        if not 0.0 < shrinkage < 1.0:
            raise ValueError("shrinkage must be in (0, 1)")
        if n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        if not 0.0 < subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        self.n_iter = n_iter
        self.depth = depth
        self.shrinkage = shrinkage
        self.subsample = subsample
        self.min_node = min_node
        self.name = "boosted"

    @property
    def stochastic(self) -> bool:
        return self.subsample < 1.0

    def fit(self, data: Dataset, seed: int = 0) -> BoostedTreesPredictor:
        X, y = data.X, data.y
        n = data.n
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB005)))
        bernoulli = data.family is Family.BERNOULLI
        if bernoulli:
            prev = np.clip(y.mean(), 1e-6, 1 - 1e-6)
            f0 = float(np.log(prev / (1 - prev)))
        else:
            f0 = float(y.mean())
        F = np.full(n, f0)
        n_sub = max(2, int(round(self.subsample * n)))
        trees, leaf_values, losses = [], [], []
        for _ in range(self.n_iter):
            rows = (rng.choice(n, size=n_sub, replace=False)
                    if n_sub < n else np.arange(n))
            if bernoulli:
                p = 1.0 / (1.0 + np.exp(-F))
                grad = y - p
                tree = build_tree(X[rows], grad[rows], None,
                                  min_node=self.min_node, max_depth=self.depth)
                # Newton step per leaf over the subsample
                leaves = tree.leaf_of
                num = np.bincount(leaves, weights=grad[rows],
                                  minlength=tree.value.size)
                hess = (p * (1 - p))[rows]
                den = np.bincount(leaves, weights=hess,
                                  minlength=tree.value.size)
                vals = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
                vals = np.clip(vals, -8.0, 8.0)
            else:
                resid = y - F
                tree = build_tree(X[rows], resid[rows], None,
                                  min_node=self.min_node, max_depth=self.depth)
                vals = tree.value
            scaled = self.shrinkage * vals
            F = F + scaled[tree.apply(X)]
            trees.append(tree)
            leaf_values.append(scaled)
            losses.append(self._loss(y, F, bernoulli))
        return BoostedTreesPredictor(f0, trees, leaf_values, data.family,
                                     losses)

    @staticmethod
    def _loss(y, F, bernoulli):
        if bernoulli:
            p = np.clip(1.0 / (1.0 + np.exp(-F)), EPS, 1 - EPS)
            return -2.0 * float(np.sum(y * np.log(p) + (1 - y) * np.log1p(-p)))
        return float(np.sum((y - F) ** 2))
