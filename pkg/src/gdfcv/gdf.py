"""Perturbation-based effective-complexity estimation.

The horizontal estimator: perturb k responses per round, refit, and for
each datum regress its refitted expectation on its perturbed response
across the rounds in which it was perturbed; the complexity estimate is
the sum of those per-datum slopes. Gaussian responses get additive
noise, binary responses get value flips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import Dataset, Family, FitError, Learner

MAX_PLAN_ATTEMPTS = 50
MAX_FLIP_RETRIES = 100
MAX_DROP_FRACTION = 0.10


@dataclass(frozen=True)
class PerturbationPlan:
    """Tuning knobs of one complexity estimate.

    k points perturbed per round, ``rounds`` perturbation rounds,
    ``internal_reps`` refits per round (averaged; needed for
    internally stochastic learners), noise scale ``sigma_frac`` as a
    fraction of sd(y) (Gaussian only).
    """

    k: int
    rounds: int
    sigma_frac: float = 0.25
    internal_reps: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.rounds < 2:
            raise ValueError("need at least 2 rounds")
        if self.internal_reps < 1:
            raise ValueError("internal_reps must be >= 1")
        if self.sigma_frac <= 0:
            raise ValueError("sigma_frac must be positive")


@dataclass
class GdfEstimate:
    gdf: float
    slopes: np.ndarray
    se: float | None
    model_evals: int
    perturb_evals: int
    baseline_evals: int
    dropped_rounds: int = 0
    flip_retries: int = 0
    warnings: tuple = ()
    meta: dict = field(default_factory=dict)


def default_plan_settings(family: Family, learner_name: str, n: int) -> dict:
    """Per-learner defaults for k and sigma_frac.

    Gaussian: k = n at noise 0.25*sd(y), except the spline learner at
    k = 0.2n. Bernoulli: k = 0.5n, except boosted trees and the
    network at k = 0.04n.
    """
    family = Family.parse(family)
    if family is Family.GAUSSIAN:
        k = max(1, round(0.2 * n)) if learner_name == "spline" else n
        return {"k": int(k), "sigma_frac": 0.25}
    frac = 0.04 if learner_name in ("boosted", "mlp") else 0.5
    return {"k": max(1, int(round(frac * n))), "sigma_frac": 0.25}


def perturb_gaussian(y: np.ndarray, idx: np.ndarray, sigma: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Add N(0, sigma) noise at positions ``idx``; others untouched."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    idx = np.asarray(idx, dtype=int)
    if idx.size == 0:
        raise ValueError("idx must be non-empty")
    y = np.asarray(y, dtype=float)
    if idx.min() < 0 or idx.max() >= y.size:
        raise ValueError("idx out of bounds")
    out = y.copy()
    out[idx] = out[idx] + rng.normal(0.0, sigma, size=idx.size)
    return out


def perturb_flip(y: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Invert binary values at positions ``idx``."""
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("flip perturbation requires a binary vector")
    idx = np.asarray(idx, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= y.size):
        raise ValueError("idx out of bounds")
    out = y.copy()
    out[idx] = 1.0 - out[idx]
    return out


def _rng(seed, *coords) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *coords)))


def _draw_index_sets(n: int, plan: PerturbationPlan,
                     need_unperturbed: bool) -> list[np.ndarray]:
    """Independent per-round subsets, redrawn as a whole until every
    datum appears in at least two rounds (and, for flip designs, is
    left unperturbed in at least one round)."""
    for attempt in range(MAX_PLAN_ATTEMPTS):
        rng = _rng(plan.seed, 0xD0, attempt)
        sets = [np.sort(rng.choice(n, size=plan.k, replace=False))
                for _ in range(plan.rounds)]
        coverage = np.zeros(n, dtype=int)
        for s in sets:
            coverage[s] += 1
        if coverage.min() >= 2 and (
                not need_unperturbed or coverage.max() <= plan.rounds - 1):
            return sets
    return _balanced_index_sets(n, plan, need_unperturbed)


def _balanced_index_sets(n: int, plan: PerturbationPlan,
                         need_unperturbed: bool) -> list[np.ndarray]:
    """Quota-based fallback for small k, where independent draws are
    essentially never going to hit every datum twice. Each datum gets a
    near-equal share of the rounds*k perturbation slots; rounds are then
    filled greedily by largest remaining quota, which always succeeds
    when the largest quota fits in the remaining rounds."""
    rng = _rng(plan.seed, 0xD1)
    cap = plan.rounds - 1 if need_unperturbed else plan.rounds
    base, extra = divmod(plan.rounds * plan.k, n)
    counts = np.full(n, base, dtype=int)
    counts[rng.choice(n, size=extra, replace=False)] += 1
    if counts.min() < 2 or counts.max() > cap:
        raise ValueError(
            "could not cover every datum in >= 2 rounds; increase rounds "
            f"(k={plan.k}, rounds={plan.rounds}, n={n})")
    sets = []
    for _ in range(plan.rounds):
        priority = counts + rng.uniform(0.0, 0.5, size=n)  # random tie-break
        idx = np.argpartition(-priority, plan.k - 1)[:plan.k]
        counts[idx] -= 1
        sets.append(np.sort(idx))
    return sets


def _mean_expectation(learner: Learner, data: Dataset, X: np.ndarray,
                      reps: int, seed, tag) -> np.ndarray:
    preds = [learner.fit(data, seed=int(_rng(seed, tag, r).integers(2**63)))
             .expectation(X)
             for r in range(reps)]
    return np.mean(preds, axis=0)


def estimate_gdf(learner: Learner, data: Dataset,
                 plan: PerturbationPlan) -> GdfEstimate:
    """Horizontal perturbation estimate of effective complexity."""
    n = data.n
    if plan.k > n:
        raise ValueError("k cannot exceed n")
    bernoulli = data.family is Family.BERNOULLI
    if bernoulli and plan.k >= n:
        raise ValueError("flip designs need k < n (some rounds must leave "
                         "each datum unperturbed)")
    reps = plan.internal_reps
    sigma = plan.sigma_frac * float(np.std(data.y))
    index_sets = _draw_index_sets(n, plan, need_unperturbed=bernoulli)

    baseline_reps = reps if learner.stochastic else 1
    mu0 = _mean_expectation(learner, data, data.X, baseline_reps,
                            plan.seed, 0xBA5E)

    # Gaussian: the unperturbed baseline pair enters the per-datum
    # regression for deterministic learners. Flips: every perturbed
    # value of a datum is the same, so the contrast comes from rounds
    # in which the datum was NOT flipped (same corrupted background),
    # never from the clean baseline fit.
    include_baseline = (not bernoulli) and (not learner.stochastic)

    perturbed = np.zeros((plan.rounds, n), dtype=bool)
    mu_rounds = np.full((plan.rounds, n), np.nan)
    y_rounds = np.full((plan.rounds, n), np.nan)
    kept = np.zeros(plan.rounds, dtype=bool)
    dropped = 0
    flip_retries = 0
    perturb_evals = 0
    warnings = []
    for t, idx in enumerate(index_sets):
        rng = _rng(plan.seed, 0x9E, t)
        if bernoulli:
            y_pert = perturb_flip(data.y, idx)
            retries = 0
            while y_pert.min() == y_pert.max():
                retries += 1
                if retries > MAX_FLIP_RETRIES:
                    raise RuntimeError("could not keep both classes present")
                idx = np.sort(rng.choice(n, size=plan.k, replace=False))
                y_pert = perturb_flip(data.y, idx)
            flip_retries += retries
        else:
            y_pert = perturb_gaussian(data.y, idx, sigma, rng)
        try:
            pert_data = data.with_response(y_pert)
            mu = _mean_expectation(learner, pert_data, data.X, reps,
                                   plan.seed, (0xF1, t))
            perturb_evals += reps
        except (FitError, np.linalg.LinAlgError, ValueError) as exc:
            dropped += 1
            warnings.append(f"round {t} dropped: {exc}")
            continue
        kept[t] = True
        perturbed[t, idx] = True
        mu_rounds[t] = mu
        y_rounds[t] = y_pert

    if dropped > MAX_DROP_FRACTION * plan.rounds:
        raise RuntimeError(
            f"unstable estimation: {dropped}/{plan.rounds} rounds dropped")

    slopes = np.empty(n)
    for i in range(n):
        hit = kept & perturbed[:, i]
        if bernoulli:
            rest = kept & ~perturbed[:, i]
            if hit.sum() < 1 or rest.sum() < 1:
                raise RuntimeError(
                    "unstable estimation: dropped rounds broke coverage")
            dy = (1.0 - data.y[i]) - data.y[i]
            slopes[i] = (mu_rounds[hit, i].mean()
                         - mu_rounds[rest, i].mean()) / dy
            continue
        ys = y_rounds[hit, i]
        mus = mu_rounds[hit, i]
        if ys.size < (1 if include_baseline else 2):
            raise RuntimeError(
                "unstable estimation: dropped rounds broke coverage")
        if include_baseline:
            ys = np.append(ys, data.y[i])
            mus = np.append(mus, mu0[i])
        yc = ys - ys.mean()
        denom = float(yc @ yc)
        if denom <= 0.0:
            raise RuntimeError(f"degenerate perturbations for datum {i}")
        slopes[i] = float(yc @ (mus - mus.mean())) / denom

    baseline_evals = baseline_reps
    kept_rounds = plan.rounds - dropped
    return GdfEstimate(
        gdf=float(slopes.sum()),
        slopes=slopes,
        se=None,
        model_evals=perturb_evals + baseline_evals,
        perturb_evals=perturb_evals,
        baseline_evals=baseline_evals,
        dropped_rounds=dropped,
        flip_retries=flip_retries,
        warnings=tuple(warnings),
        meta={"k": plan.k, "rounds": plan.rounds, "kept_rounds": kept_rounds,
              "sigma_frac": plan.sigma_frac, "internal_reps": reps,
              "seed": plan.seed},
    )


def replicate_gdf(learner: Learner, data: Dataset, plan: PerturbationPlan,
                  replicates: int) -> list[GdfEstimate]:
    """Independent re-estimates with per-replicate derived seeds."""
    out = []
    for r in range(replicates):
        seed = int(_rng(plan.seed, 0x4E9, r).integers(2**63))
        rplan = PerturbationPlan(plan.k, plan.rounds, plan.sigma_frac,
                                 plan.internal_reps, seed)
        out.append(estimate_gdf(learner, data, rplan))
    return out


def gdf_cov_oracle(learner: Learner, X: np.ndarray, mean: np.ndarray,
                   sigma_eps: float, n_sims: int, seed: int = 0):
    """Monte-Carlo covariance estimate sum_i cov(mu_i, y_i)/sigma^2 for a
    known additive-error generator at fixed covariates.

    Returns (value, standard error, simulations used). The standard
    error comes from the per-simulation contributions to the sample
    covariance.
    """
    if n_sims < 100:
        raise ValueError("n_sims must be >= 100")
    X = np.asarray(X, dtype=float)
    mean = np.asarray(mean, dtype=float)
    n = X.shape[0]
    ys = np.empty((n_sims, n))
    mus = np.empty((n_sims, n))
    ok = np.ones(n_sims, dtype=bool)
    for s in range(n_sims):
        rng = _rng(seed, 0xC0, s)
        y = mean + rng.normal(0.0, sigma_eps, size=n)
        try:
            data = Dataset(X, y, Family.GAUSSIAN)
            fit_seed = int(_rng(seed, 0xC1, s).integers(2**63))
            mus[s] = learner.fit(data, seed=fit_seed).expectation(X)
            ys[s] = y
        except (FitError, np.linalg.LinAlgError) as exc:
            ok[s] = False
    ys, mus = ys[ok], mus[ok]
    m = ys.shape[0]
    yc = ys - ys.mean(axis=0)
    mc = mus - mus.mean(axis=0)
    # per-sim contribution to sum_i cov(mu_i, y_i)/sigma^2
    contrib = (yc * mc).sum(axis=1) * (m / (m - 1)) / sigma_eps**2
    value = float(contrib.mean())
    se = float(contrib.std(ddof=1) / np.sqrt(m))
    return value, se, m


def sweep_k(learner: Learner, data: Dataset, k_values, reps: int,
            rounds: int, sigma_frac: float = 0.25, internal_reps: int = 1,
            seed: int = 0) -> pd.DataFrame:
    """Long-format (k, replicate, gdf) table for the k-sweep figures."""
    rows = []
    for k in k_values:
        if not 1 <= k <= data.n:
            raise ValueError(f"k={k} outside [1, n]")
        for r in range(reps):
            cell_seed = int(_rng(seed, 0x5E, int(k), r).integers(2**63))
            plan = PerturbationPlan(int(k), rounds, sigma_frac,
                                    internal_reps, cell_seed)
            est = estimate_gdf(learner, data, plan)
            rows.append({"k": int(k), "replicate": r, "gdf": est.gdf,
                         "model_evals": est.model_evals,
                         "dropped_rounds": est.dropped_rounds})
    return pd.DataFrame(rows)


def sweep_sigma(learner: Learner, data: Dataset, sigma_fracs, reps: int,
                k: int, rounds: int, internal_reps: int = 1,
                seed: int = 0) -> pd.DataFrame:
    """Long-format (sigma_frac, replicate, gdf) table (Gaussian only)."""
    if data.family is not Family.GAUSSIAN:
        raise ValueError("magnitude sweep applies to Gaussian data only")
    rows = []
    for sf in sigma_fracs:
        for r in range(reps):
            cell_seed = int(_rng(seed, 0x51, int(sf * 1e9), r).integers(2**63))
            plan = PerturbationPlan(k, rounds, float(sf), internal_reps,
                                    cell_seed)
            est = estimate_gdf(learner, data, plan)
            rows.append({"sigma_frac": float(sf), "replicate": r,
                         "gdf": est.gdf, "model_evals": est.model_evals,
                         "dropped_rounds": est.dropped_rounds})
    return pd.DataFrame(rows)


def convergence_study(learner: Learner, data: Dataset,
                      plan: PerturbationPlan,
                      max_replicates: int) -> pd.DataFrame:
    """Running mean / standard error of the estimate over replicates."""
    ests = replicate_gdf(learner, data, plan, max_replicates)
    vals = np.array([e.gdf for e in ests])
    evals = np.array([e.model_evals for e in ests])
    r = np.arange(1, max_replicates + 1)
    cum_mean = np.cumsum(vals) / r
    cum_se = np.empty(max_replicates)
    cum_se[0] = np.nan
    for i in range(1, max_replicates):
        cum_se[i] = vals[: i + 1].std(ddof=1) / np.sqrt(i + 1)
    return pd.DataFrame({
        "replicate": r,
        "gdf": vals,
        "running_mean": cum_mean,
        "running_se": cum_se,
        "cumulative_evals": np.cumsum(evals),
    })
