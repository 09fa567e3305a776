"""The four classifiers, a shared predict interface, and model (de)serialisation."""

from __future__ import annotations

import numpy as np

from .adaboost import AdaBoostModel, adaboost_scores, adaboost_train
from .base import (
    ConstantVectorError,
    DegenerateClassError,
    NonFiniteLossError,
    Prediction,
    WeakLearnerFailureError,
    WidthMismatchError,
)
from .io import load_model, save_model
from .knn import KnnModel, correlation_distance, knn_scores, knn_train
from .lstm import LstmConfig, LstmModel, lstm_scores, lstm_train
from .svm import BinarySvm, SvmModel, svm_scores, svm_train

TrainedModel = KnnModel | SvmModel | AdaBoostModel | LstmModel

_SCORERS = {
    KnnModel: knn_scores,
    SvmModel: svm_scores,
    AdaBoostModel: adaboost_scores,
    LstmModel: lstm_scores,
}


def variant_of(model: TrainedModel) -> str:
    return {
        KnnModel: "knn",
        SvmModel: "svm",
        AdaBoostModel: "adaboost",
        LstmModel: "lstm",
    }[type(model)]


def predict_batch(model: TrainedModel, X: np.ndarray) -> tuple[list, np.ndarray]:
    """Labels and per-class score rows for a query matrix."""
    scorer = _SCORERS.get(type(model))
    if scorer is None:
        raise TypeError(f"{type(model).__name__} is not a trained model")
    codes, scores = scorer(model, np.atleast_2d(np.asarray(X, dtype=float)))
    return [model.classes[int(c)] for c in codes], scores


def predict(model: TrainedModel, x: np.ndarray) -> Prediction:
    """Classify a single feature vector."""
    labels, scores = predict_batch(model, np.asarray(x, dtype=float)[None, :])
    return Prediction(label=labels[0], scores=scores[0])


__all__ = [
    "AdaBoostModel",
    "BinarySvm",
    "ConstantVectorError",
    "DegenerateClassError",
    "KnnModel",
    "LstmConfig",
    "LstmModel",
    "NonFiniteLossError",
    "Prediction",
    "SvmModel",
    "TrainedModel",
    "WeakLearnerFailureError",
    "WidthMismatchError",
    "adaboost_train",
    "correlation_distance",
    "knn_train",
    "load_model",
    "lstm_train",
    "predict",
    "predict_batch",
    "save_model",
    "svm_train",
    "variant_of",
]
