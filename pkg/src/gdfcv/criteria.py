"""Information criteria and model weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd


def aicc(ell: float, p: float, n: int, compat_half_correction: bool = False) -> float:
    """Small-sample corrected AIC: -2*ell + 2p + 2p(p+1)/(n-p-1).

    ``compat_half_correction=True`` drops the factor 2 on the correction
    term (a published variant of the formula), for side-by-side
    reproduction only.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    if n - p - 1 <= 0:
        raise ValueError("correction undefined: need n - p - 1 > 0")
    correction = p * (p + 1.0) / (n - p - 1.0)
    if not compat_half_correction:
        correction *= 2.0
    return float(-2.0 * ell + 2.0 * p + correction)


def akaike_weights(aicc_values) -> np.ndarray:
    """Normalized exp(-delta/2) with delta relative to the best model."""
    a = np.asarray(aicc_values, dtype=float)
    if a.size < 1 or np.any(np.isnan(a)):
        raise ValueError("need at least one finite AICc value, no NaNs")
    delta = a - a.min()
    w = np.exp(-0.5 * delta)
    return w / w.sum()


def cv_weights(ell_cv_values, compat_printed_sign: bool = False) -> np.ndarray:
    """Weights from cross-validated log-likelihoods.

    The best model (largest ell_cv) receives the largest weight.
    ``compat_printed_sign=True`` flips the exponent sign, reproducing a
    variant in which the ordering is inverted.
    """
    e = np.asarray(ell_cv_values, dtype=float)
    if e.size < 1 or np.any(np.isnan(e)):
        raise ValueError("need at least one finite value, no NaNs")
    delta = e.max() - e
    w = np.exp(delta) if compat_printed_sign else np.exp(-delta)
    return w / w.sum()


@dataclass
class ModelComparison:
    names: tuple
    ell_m: np.ndarray
    complexity: np.ndarray
    aicc: np.ndarray
    ell_cv: np.ndarray
    cv_deviance: np.ndarray
    w_aic: np.ndarray
    w_cv: np.ndarray
    n: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "model": self.names,
            "ell_m": self.ell_m,
            "complexity": self.complexity,
            "aicc": self.aicc,
            "cv_deviance": self.cv_deviance,
            "w_aic": self.w_aic,
            "w_cv": self.w_cv,
            "aicc_per_datum": self.aicc / self.n,
            "cv_deviance_per_datum": self.cv_deviance / self.n,
        })


def compare_models(names, ell_m, complexity, ell_cv, n,
                   compat_half_correction: bool = False,
                   compat_printed_sign: bool = False) -> ModelComparison:
    """Side-by-side table: AICc from complexity estimates vs CV deviance,
    with both families of model weights."""
    names = tuple(names)
    ell_m = np.asarray(ell_m, dtype=float)
    complexity = np.asarray(complexity, dtype=float)
    ell_cv = np.asarray(ell_cv, dtype=float)
    if not (len(names) == ell_m.size == complexity.size == ell_cv.size):
        raise ValueError("model lists must have matching lengths")
    aicc_vals = np.array([aicc(e, p, n, compat_half_correction)
                          for e, p in zip(ell_m, complexity)])
    return ModelComparison(
        names=names, ell_m=ell_m, complexity=complexity, aicc=aicc_vals,
        ell_cv=ell_cv, cv_deviance=-2.0 * ell_cv,
        w_aic=akaike_weights(aicc_vals),
        w_cv=cv_weights(ell_cv, compat_printed_sign), n=n)
