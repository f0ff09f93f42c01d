"""Self-contained learners behind one train/predict/save/load surface.

Three model families, all written here on numpy: an RBF support vector
machine with sigmoid-calibrated probabilities, logistic-loss gradient
boosted trees, and a random forest. An ensemble wrapper averages member
probabilities. Training canonicalizes row order first, so results do not
depend on how the caller happened to shuffle the dataset.
"""

from .dataset import Dataset
from .models import (
    EnsembleModel,
    ForestModel,
    GbmModel,
    Model,
    SvmModel,
    predict_proba,
    train,
)
from .serialize import load_model, save_model

__all__ = [
    "Dataset",
    "Model",
    "SvmModel",
    "GbmModel",
    "ForestModel",
    "EnsembleModel",
    "train",
    "predict_proba",
    "save_model",
    "load_model",
]
