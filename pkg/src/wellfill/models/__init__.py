from .boosting import GradientBoostedEnsemble, fit_gb
from .io import MODEL_KINDS, ModelFormatError, Regressor, fit_regressor, load_model, save_model
from .linear import LinearModel, fit_linear
from .mlp import MlpModel, MlpTrainingError, TrainConfig, fit_mlp
from .tree import RegressionTree, SplitSearch, fit_tree


def predict(model, X):
    """Predictions of any fitted model or pipeline; raises on a feature-width mismatch."""
    return model.predict(X)


__all__ = [
    "GradientBoostedEnsemble", "LinearModel", "MODEL_KINDS", "MlpModel", "MlpTrainingError",
    "ModelFormatError", "RegressionTree", "Regressor", "SplitSearch", "TrainConfig",
    "fit_gb", "fit_linear", "fit_mlp", "fit_regressor", "fit_tree", "load_model", "predict",
    "save_model",
]
