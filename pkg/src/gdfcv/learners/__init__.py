from .boosting import BoostedTreesLearner, BoostedTreesPredictor
from .design import DesignMatrix, LinearSmoother, design_expand, hat_matrix
from .glm import GlmLearner, GlmPredictor
from .mlp import MlpLearner, MlpPredictor
from .splines import SplineAdditiveLearner, SplinePredictor
from .trees import BaggedTreesLearner, BaggedTreesPredictor, build_tree

__all__ = [
    "BaggedTreesLearner", "BaggedTreesPredictor", "BoostedTreesLearner",
    "BoostedTreesPredictor", "DesignMatrix", "GlmLearner", "GlmPredictor",
    "LinearSmoother", "MlpLearner", "MlpPredictor", "SplineAdditiveLearner",
    "SplinePredictor", "build_tree", "design_expand", "hat_matrix",
]
