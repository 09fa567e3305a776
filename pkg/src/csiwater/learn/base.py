"""Shared classifier plumbing: class lists, predictions, typed errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np


class WidthMismatchError(ValueError):
    """Query width differs from the model's feature width."""


class ConstantVectorError(ValueError):
    """Correlation distance is undefined for zero-variance vectors."""


class DegenerateClassError(ValueError):
    """A training (sub)problem saw fewer than two classes."""


class WeakLearnerFailureError(RuntimeError):
    """Boosting's first round could not beat chance."""


class NonFiniteLossError(RuntimeError):
    """Training hit NaN/Inf loss; carries the offending batch index."""

    def __init__(self, batch_index: int):
        super().__init__(f"non-finite loss in batch {batch_index}")
        self.batch_index = batch_index


@dataclass(frozen=True, eq=False)
class Prediction:
    """Predicted label plus per-class scores in class-list order.

    The label always equals argmax(scores) with ties broken toward the
    lowest class index.
    """

    label: Hashable
    scores: np.ndarray


def resolve_classes(y: Sequence, classes=None) -> tuple:
    """Fix the class list.

    An explicit list wins. Otherwise the distinct labels are sorted when
    they support ordering (ints, strings), else kept in first-appearance
    order. The evaluation layer always passes the canonical order
    explicitly.
    """
    if classes is not None:
        classes = tuple(classes)
        if len(classes) == 0 or len(set(classes)) != len(classes):
            raise ValueError("class list must be non-empty and duplicate-free")
        return classes
    seen: list = []
    for label in y:
        if label not in seen:
            seen.append(label)
    if not seen:
        raise ValueError("cannot infer classes from empty labels")
    try:
        return tuple(sorted(seen))
    except TypeError:
        return tuple(seen)


def encode_labels(y: Sequence, classes: tuple) -> np.ndarray:
    index = {label: i for i, label in enumerate(classes)}
    try:
        return np.array([index[label] for label in y], dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class list") from exc


def check_width(n_features: int, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise WidthMismatchError(
            f"query width {X.shape[1]} does not match model width {n_features}"
        )
    return X


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out
