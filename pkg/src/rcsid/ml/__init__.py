"""Feature-based classifiers: kNN, naive Bayes, CART, LDA, RBF-SVM and bagged trees."""

from .hyperparams import (
    DaParams,
    EnsembleParams,
    KnnParams,
    ML_FAMILIES,
    MlHyperparams,
    NbParams,
    PRESETS,
    SvmParams,
    TreeParams,
    default_hyperparams,
)
from .models import Standardizer, TrainedClassifier, load_classifier, predict, train

__all__ = [
    "DaParams", "EnsembleParams", "KnnParams", "ML_FAMILIES", "MlHyperparams", "NbParams", "PRESETS",
    "SvmParams", "TreeParams", "default_hyperparams", "Standardizer", "TrainedClassifier",
    "load_classifier", "predict", "train",
]
