"""Config-driven experiment orchestration: dataset ingestion/simulation,
task execution over a worker pool, evaluation accounting and result
serialization (run.json + long-format results.csv)."""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import __version__
from .core import Dataset, Family, simulate_bernoulli, simulate_gaussian
from .crossval import cv_loglik, make_folds
from .criteria import compare_models
from .gdf import PerturbationPlan, default_plan_settings, estimate_gdf
from .learners import (BaggedTreesLearner, BoostedTreesLearner, GlmLearner,
                       MlpLearner, SplineAdditiveLearner)

TASKS = ("gdf", "cv", "sweep-k", "sweep-sigma", "converge", "compare")

MODEL_REGISTRY = {
    "glm": GlmLearner,
    "spline": SplineAdditiveLearner,
    "bagged": BaggedTreesLearner,
    "boosted": BoostedTreesLearner,
    "mlp": MlpLearner,
}


def _rng(seed, *coords) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *coords)))


def _derive_seed(master: int, tag: str, *coords) -> int:
    h = sum((i + 1) * (ord(c) + 1) for i, c in enumerate(tag))
    return int(_rng(master, h, *coords).integers(2**63))


@dataclass
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)

    def build(self):
        if self.name not in MODEL_REGISTRY:
            raise ValueError(f"unknown model {self.name!r}; "
                             f"choose from {sorted(MODEL_REGISTRY)}")
        return MODEL_REGISTRY[self.name](**self.params)


@dataclass
class DatasetSpec:
    kind: str = "simulate"          # "simulate" | "csv"
    family: str = "gaussian"
    n: int = 250
    seed: int = 1
    path: str | None = None
    response: str | None = None

    def load(self) -> Dataset:
        fam = Family.parse(self.family)
        if self.kind == "simulate":
            if fam is Family.GAUSSIAN:
                return simulate_gaussian(self.n, self.seed)
            return simulate_bernoulli(self.n, self.seed)
        if self.kind == "csv":
            if not self.path or not self.response:
                raise ValueError("csv dataset needs 'path' and 'response'")
            return ingest_csv(self.path, self.response, fam)
        raise ValueError(f"unknown dataset kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    """One experiment; every field has a paper-settings default."""

    task: str = "gdf"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    models: list = field(default_factory=lambda: [ModelSpec("glm")])
    k: int | None = None                 # None: per-model default
    k_values: list | None = None
    sigma_frac: float = 0.25
    sigma_fracs: list = field(default_factory=lambda: [0.125, 0.25, 0.5])
    rounds: int | None = None            # None: coverage-based default
    internal_reps: int = 1
    replicates: int = 10
    repeats: int = 100
    folds: int = 10
    seed: int = 0
    workers: int = 0                     # 0: available parallelism
    compat_eq11: bool = False            # half-size AICc correction term
    compat_eq13: bool = False            # inverted CV-weight exponent

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; choose from {TASKS}")
        if isinstance(self.dataset, dict):
            self.dataset = DatasetSpec(**self.dataset)
        self.models = [ModelSpec(**m) if isinstance(m, dict) else m
                       for m in self.models]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


def default_rounds(n: int, k: int) -> int:
    """Enough rounds for the every-datum-twice coverage guarantee."""
    if k >= n:
        return 20
    return max(20, math.ceil(8.0 * n / k))


def ingest_csv(path: str, response: str, family) -> Dataset:
    """Read a header CSV; covariates keep file column order."""
    family = Family.parse(family)
    frame = pd.read_csv(path)
    if response not in frame.columns:
        raise ValueError(f"response column {response!r} not found in {path}")
    if frame.isna().any().any():
        r_idx, c_idx = np.nonzero(frame.isna().to_numpy())
        bad = [(int(r), str(frame.columns[c])) for r, c in zip(r_idx, c_idx)]
        raise ValueError(f"missing values at (row, column): {bad[:20]}")
    y = frame[response].to_numpy(dtype=float)
    X = frame.drop(columns=[response]).to_numpy(dtype=float)
    if family is Family.BERNOULLI and not np.all((y == 0) | (y == 1)):
        raise ValueError("Bernoulli response must contain only 0 and 1")
    return Dataset(X, y, family)


# ---------------------------------------------------------------------
# cells: independent units of work scheduled onto the pool


def _gdf_cell(args):
    learner, data, plan = args
    est = estimate_gdf(learner, data, plan)
    return {"gdf": est.gdf, "model_evals": est.model_evals,
            "perturb_evals": est.perturb_evals,
            "baseline_evals": est.baseline_evals,
            "dropped_rounds": est.dropped_rounds,
            "flip_retries": est.flip_retries,
            "warnings": list(est.warnings)}


def _cv_cell(args):
    learner, data, K, seed = args
    strat_y = data.y if data.family is Family.BERNOULLI else None
    plan = make_folds(data.n, K, strat_y, seed=seed)
    est = cv_loglik(learner, data, plan, seed=seed)
    return {"ell_cv": est.ell_cv, "ell_m": est.ell_m,
            "p_hat": est.p_hat, "p_hat_c": est.p_hat_c,
            "model_evals": est.model_evals, "fold_evals": K,
            "warnings": list(est.warnings)}


def _run_cells(fn, cells, workers: int):
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells, chunksize=1))


# ---------------------------------------------------------------------


def _plan_for(cfg: ExperimentConfig, data: Dataset, spec: ModelSpec,
              seed: int, k: int | None = None,
              sigma_frac: float | None = None) -> PerturbationPlan:
    defaults = default_plan_settings(data.family, spec.name, data.n)
    k = k if k is not None else (cfg.k if cfg.k is not None else defaults["k"])
    sf = sigma_frac if sigma_frac is not None else cfg.sigma_frac
    rounds = cfg.rounds if cfg.rounds is not None else default_rounds(data.n, k)
    return PerturbationPlan(k=int(k), rounds=rounds, sigma_frac=float(sf),
                            internal_reps=cfg.internal_reps, seed=seed)


def _gdf_cells_for_model(cfg, data, spec, learner, replicates,
                         k=None, sigma_frac=None, tag="gdf"):
    cells = []
    for r in range(replicates):
        seed = _derive_seed(cfg.seed, tag, k or 0,
                            int((sigma_frac or 0) * 1e9), r)
        cells.append((learner, data, _plan_for(cfg, data, spec, seed,
                                               k, sigma_frac)))
    return cells


def _summarize(values):
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()),
            "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "se": float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0,
            "n": int(v.size)}


def run(config: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Execute the configured task; returns the run record and, when
    ``out_dir`` is given, writes run.json and results.csv there."""
    t0 = time.monotonic()
    data = config.dataset.load()
    rows = []            # long-format results
    results = {}
    warnings = []
    total_evals = 0
    try:
        for spec in config.models:
            learner = spec.build()
            model_res, model_rows, evals, warns = _run_model_task(
                config, data, spec, learner)
            results[spec.name] = model_res
            rows.extend(model_rows)
            total_evals += evals
            warnings.extend(f"{spec.name}: {w}" for w in warns)
        if config.task == "compare":
            results["comparison"] = _assemble_comparison(config, data,
                                                         results, rows)
        partial = False
    except Exception:
        partial = True
        record = _record(config, results, rows, total_evals, warnings,
                         t0, partial=True)
        if out_dir:
            _write(record, rows, out_dir)
        raise
    record = _record(config, results, rows, total_evals, warnings, t0,
                     partial=False)
    if out_dir:
        _write(record, rows, out_dir)
    return record


def _run_model_task(cfg: ExperimentConfig, data: Dataset, spec: ModelSpec,
                    learner):
    task = cfg.task
    rows, warns = [], []
    evals = 0
    res: dict = {}
    if task in ("gdf", "compare", "converge"):
        replicates = cfg.replicates
        cells = _gdf_cells_for_model(cfg, data, spec, learner, replicates)
        outs = _run_cells(_gdf_cell, cells, cfg.workers)
        vals = [o["gdf"] for o in outs]
        for r, o in enumerate(outs):
            rows.append((task, spec.name, "gdf", r, o["gdf"]))
            evals += o["model_evals"]
            warns.extend(o["warnings"])
        res["gdf"] = _summarize(vals)
        res["gdf"]["values"] = [float(v) for v in vals]
        res["gdf"]["perturb_evals"] = int(sum(o["perturb_evals"] for o in outs))
        res["gdf"]["baseline_evals"] = int(sum(o["baseline_evals"] for o in outs))
        res["gdf"]["dropped_rounds"] = int(sum(o["dropped_rounds"] for o in outs))
        res["gdf"]["flip_retries"] = int(sum(o["flip_retries"] for o in outs))
        if task == "converge":
            running = np.cumsum(vals) / np.arange(1, len(vals) + 1)
            cum_evals = np.cumsum([o["model_evals"] for o in outs])
            for r, (m, ce) in enumerate(zip(running, cum_evals)):
                rows.append((task, spec.name, "running_mean", r, float(m)))
            res["running_mean"] = [float(m) for m in running]
            res["cumulative_evals"] = [int(c) for c in cum_evals]
    if task in ("cv", "compare"):
        cells = [(learner, data, cfg.folds,
                  _derive_seed(cfg.seed, "cv", r))
                 for r in range(cfg.repeats)]
        outs = _run_cells(_cv_cell, cells, cfg.workers)
        for r, o in enumerate(outs):
            rows.append((task, spec.name, "ell_cv", r, o["ell_cv"]))
            rows.append((task, spec.name, "p_hat", r, o["p_hat"]))
            evals += o["model_evals"]
            warns.extend(o["warnings"])
        res["ell_cv"] = _summarize([o["ell_cv"] for o in outs])
        res["p_hat"] = _summarize([o["p_hat"] for o in outs])
        res["p_hat_c"] = _summarize([o["p_hat_c"] for o in outs])
        res["ell_m"] = _summarize([o["ell_m"] for o in outs])
        res["cv_deviance"] = _summarize([-2.0 * o["ell_cv"] for o in outs])
        res["fold_evals"] = int(sum(o["fold_evals"] for o in outs))
    if task == "sweep-k":
        k_values = cfg.k_values or sorted({max(1, round(f * data.n))
                                           for f in (0.01, 0.05, 0.1, 0.2,
                                                     0.5, 1.0)})
        for k in k_values:
            cells = _gdf_cells_for_model(cfg, data, spec, learner,
                                         cfg.replicates, k=int(k),
                                         tag="sweepk")
            outs = _run_cells(_gdf_cell, cells, cfg.workers)
            for r, o in enumerate(outs):
                rows.append((task, spec.name, f"k={int(k)}", r, o["gdf"]))
                evals += o["model_evals"]
                warns.extend(o["warnings"])
            res[f"k={int(k)}"] = _summarize([o["gdf"] for o in outs])
    if task == "sweep-sigma":
        if data.family is not Family.GAUSSIAN:
            raise ValueError("sweep-sigma applies to Gaussian data only")
        for sf in cfg.sigma_fracs:
            cells = _gdf_cells_for_model(cfg, data, spec, learner,
                                         cfg.replicates,
                                         sigma_frac=float(sf), tag="sweeps")
            outs = _run_cells(_gdf_cell, cells, cfg.workers)
            for r, o in enumerate(outs):
                rows.append((task, spec.name, f"sigma={sf}", r, o["gdf"]))
                evals += o["model_evals"]
                warns.extend(o["warnings"])
            res[f"sigma={sf}"] = _summarize([o["gdf"] for o in outs])
    return res, rows, evals, warns


def _assemble_comparison(cfg: ExperimentConfig, data: Dataset, results: dict,
                         rows: list):
    names = [m.name for m in cfg.models]
    comp = compare_models(
        names,
        ell_m=[results[m]["ell_m"]["mean"] for m in names],
        complexity=[results[m]["gdf"]["mean"] for m in names],
        ell_cv=[results[m]["ell_cv"]["mean"] for m in names],
        n=data.n,
        compat_half_correction=cfg.compat_eq11,
        compat_printed_sign=cfg.compat_eq13,
    )
    frame = comp.to_frame()
    for _, row in frame.iterrows():
        for col in ("aicc", "cv_deviance", "w_aic", "w_cv"):
            rows.append(("compare", row["model"], col, 0, float(row[col])))
    return frame.to_dict(orient="records")


def _record(config, results, rows, total_evals, warnings, t0, partial):
    return {
        "config": config.to_dict(),
        "task": config.task,
        "results": results,
        "total_model_evals": int(total_evals),
        "wall_time_s": round(time.monotonic() - t0, 3),
        "warnings": list(warnings),
        "partial": partial,
        "version": __version__,
    }


def _write(record: dict, rows: list, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "run.json"), "w") as fh:
        json.dump(record, fh, indent=2, default=float)
    frame = pd.DataFrame(rows, columns=["task", "model", "parameter",
                                        "replicate", "value"])
    frame.to_csv(os.path.join(out_dir, "results.csv"), index=False,
                 float_format="%.12g")
