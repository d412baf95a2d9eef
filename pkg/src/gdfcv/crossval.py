"""K-fold (optionally stratified, optionally repeated) cross-validation
log-likelihood, deviance and the derived model-complexity estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Family, Learner, log_likelihood


def _rng(seed, *coords) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *coords)))


@dataclass(frozen=True)
class FoldPlan:
    n: int
    K: int
    stratified: bool
    assignments: np.ndarray  # fold index per datum
    seed: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int)
        if a.shape != (self.n,):
            raise ValueError("assignments must have length n")
        sizes = np.bincount(a, minlength=self.K)
        if sizes.size != self.K or sizes.max() - sizes.min() > 1 or sizes.min() == 0:
            raise ValueError("fold sizes must differ by at most 1")
        object.__setattr__(self, "assignments", a)

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments == fold)[0]


@dataclass
class CvEstimate:
    ell_cv: float
    ell_m: float
    n: int
    se: float | None = None
    repeats: int = 1
    model_evals: int = 0
    warnings: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def deviance(self) -> float:
        return -2.0 * self.ell_cv

    @property
    def p_hat(self) -> float:
        return self.ell_m - self.ell_cv

    @property
    def p_hat_c(self) -> float:
        gap = self.ell_m - self.ell_cv
        return gap * (self.n - 1) / (gap + self.n)


def make_folds(n: int, K: int, y: np.ndarray | None = None,
               seed: int = 0) -> FoldPlan:
    """Random K-fold partition; with binary ``y``, per-fold positive
    counts differ by at most 1 (prevalence-preserving)."""
    if not 2 <= K <= n:
        raise ValueError("need 2 <= K <= n")
    rng = _rng(seed, 0xF0)
    assignments = np.empty(n, dtype=int)
    if y is None:
        perm = rng.permutation(n)
        assignments[perm] = np.arange(n) % K
        return FoldPlan(n, K, False, assignments, seed)

    y = np.asarray(y, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("stratification requires a binary response")
    pos = np.nonzero(y == 1)[0]
    neg = np.nonzero(y == 0)[0]
    if min(pos.size, neg.size) < K:
        raise ValueError("cannot stratify: a class is smaller than K")
    # folds listed in random order; positives then negatives dealt
    # round-robin from opposite ends so size remainders do not pile up
    # on the same folds
    fold_order = rng.permutation(K)
    ppos = rng.permutation(pos)
    pneg = rng.permutation(neg)
    assignments[ppos] = fold_order[np.arange(ppos.size) % K]
    assignments[pneg] = fold_order[::-1][np.arange(pneg.size) % K]
    return FoldPlan(n, K, True, assignments, seed)


def cv_loglik(learner: Learner, data: Dataset, plan: FoldPlan,
              seed: int = 0) -> CvEstimate:
    """Held-out log-likelihood summed over folds, plus the full-data fit.

    Gaussian held-out densities use the training-fold residual scale
    (the held-out responses never touch the scale estimate).
    """
    if plan.n != data.n:
        raise ValueError("fold plan does not match the dataset")
    gaussian = data.family is Family.GAUSSIAN
    warnings = []
    ell_cv = 0.0
    for fold in range(plan.K):
        test = plan.fold_indices(fold)
        train = np.nonzero(plan.assignments != fold)[0]
        train_data = Dataset(data.X[train], data.y[train], data.family)
        fit_seed = int(_rng(seed, 0xCF, fold).integers(2**63))
        pred = learner.fit(train_data, seed=fit_seed)
        warnings.extend(pred.warnings)
        sigma = None
        if gaussian:
            resid = data.y[train] - pred.expectation(data.X[train])
            sigma = float(np.sqrt(np.mean(resid**2)))
            if sigma == 0.0:
                raise ValueError("degenerate sigma in training fold")
        mu_test = pred.expectation(data.X[test])
        ell_cv += log_likelihood(data.y[test], mu_test, data.family,
                                 sigma=sigma)
    full_seed = int(_rng(seed, 0xCE).integers(2**63))
    full = learner.fit(data, seed=full_seed)
    warnings.extend(full.warnings)
    ell_m = log_likelihood(data.y, full.expectation(data.X), data.family)
    return CvEstimate(ell_cv=float(ell_cv), ell_m=float(ell_m), n=data.n,
                      model_evals=plan.K + 1, warnings=tuple(warnings),
                      meta={"K": plan.K, "stratified": plan.stratified,
                            "seed": seed})


def repeated_cv(learner: Learner, data: Dataset, K: int, repeats: int,
                seed: int = 0) -> CvEstimate:
    """Mean over ``repeats`` fresh fold plans; ``se`` is the standard
    error of ell_cv across repeats."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    strat_y = data.y if data.family is Family.BERNOULLI else None
    ests = []
    for r in range(repeats):
        fold_seed = int(_rng(seed, 0xCC, r).integers(2**63))
        plan = make_folds(data.n, K, strat_y, seed=fold_seed)
        ests.append(cv_loglik(learner, data, plan, seed=fold_seed))
    ell_vals = np.array([e.ell_cv for e in ests])
    ell_m_vals = np.array([e.ell_m for e in ests])
    se = (float(ell_vals.std(ddof=1) / np.sqrt(repeats))
          if repeats > 1 else None)
    warnings = tuple(w for e in ests for w in e.warnings)
    return CvEstimate(
        ell_cv=float(ell_vals.mean()), ell_m=float(ell_m_vals.mean()),
        n=data.n, se=se, repeats=repeats,
        model_evals=repeats * (K + 1), warnings=warnings,
        meta={"K": K, "repeats": repeats, "seed": seed,
              "fold_evals": repeats * K,
              "p_hat_values": [float(e.p_hat) for e in ests]},
    )
