"""Effective model complexity by response perturbation and repeated
cross-validation, plus AICc-based model weights for model comparison."""

__version__ = "0.1.0"

from .core import (Dataset, Family, FitError, Learner, Predictor,
                   log_likelihood, simulate_bernoulli, simulate_gaussian)
from .criteria import ModelComparison, aicc, akaike_weights, compare_models, cv_weights
from .crossval import CvEstimate, FoldPlan, cv_loglik, make_folds, repeated_cv
from .gdf import (GdfEstimate, PerturbationPlan, convergence_study,
                  default_plan_settings, estimate_gdf, gdf_cov_oracle,
                  perturb_flip, perturb_gaussian, replicate_gdf, sweep_k,
                  sweep_sigma)
from .learners import (BaggedTreesLearner, BoostedTreesLearner, GlmLearner,
                       MlpLearner, SplineAdditiveLearner, design_expand,
                       hat_matrix)

__all__ = [
    "BaggedTreesLearner", "BoostedTreesLearner", "CvEstimate", "Dataset",
    "Family", "FitError", "GdfEstimate", "GlmLearner", "Learner",
    "MlpLearner", "ModelComparison", "PerturbationPlan", "Predictor",
    "SplineAdditiveLearner", "aicc", "akaike_weights", "compare_models",
    "convergence_study", "cv_loglik", "cv_weights", "default_plan_settings",
    "design_expand", "estimate_gdf", "FoldPlan", "gdf_cov_oracle",
    "hat_matrix", "log_likelihood", "make_folds", "perturb_flip",
    "perturb_gaussian", "repeated_cv", "replicate_gdf", "simulate_bernoulli",
    "simulate_gaussian", "sweep_k", "sweep_sigma",
]
