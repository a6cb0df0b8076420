from .bayes import train_naive_bayes
from .discriminant import train_dlda, train_lda
from .grid import HyperGrid, train_path
from .logreg import train_logreg
from .models import (
    ClassifierKind,
    LinearModel,
    TrainingError,
    VttModel,
    predict,
    predict_labels,
)
from .svm import svm_objective, train_svm
from .vtt import FeatureStats, feature_stats, train_vtt, vtt_score, vtt_theta

__all__ = [
    "ClassifierKind",
    "FeatureStats",
    "HyperGrid",
    "LinearModel",
    "TrainingError",
    "VttModel",
    "feature_stats",
    "predict",
    "predict_labels",
    "svm_objective",
    "train_dlda",
    "train_lda",
    "train_logreg",
    "train_naive_bayes",
    "train_path",
    "train_svm",
    "train_vtt",
    "vtt_score",
    "vtt_theta",
]
