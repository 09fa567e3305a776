"""k-nearest-neighbour classifier with correlation distance.

Correlation distance between two vectors is one minus the Pearson
correlation of their entries: d in [0, 2], zero for any positive affine
image of the same vector. Euclidean distance is also available for the
hyperparameter search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import ConstantVectorError, check_width, encode_labels, resolve_classes

METRICS = ("correlation", "euclidean")


def _center_unit_rows(M: np.ndarray, what: str) -> np.ndarray:
    """Rows centered and scaled to unit norm; rejects constant rows."""
    centered = M - M.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.nonzero(norms == 0.0)[0][0])
        raise ConstantVectorError(
            f"{what} row {bad} is constant; correlation distance is undefined"
        )
    return centered / norms[:, None]


def correlation_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - Pearson correlation of the entries of u and v; range [0, 2]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cu = _center_unit_rows(u[None, :], "input")[0]
    cv = _center_unit_rows(v[None, :], "input")[0]
    return float(np.clip(1.0 - cu @ cv, 0.0, 2.0))


@dataclass(eq=False)
class KnnModel:
    classes: tuple
    n_features: int
    k: int
    metric: str
    X: np.ndarray
    y_codes: np.ndarray


def knn_train(
    X: np.ndarray, y: Sequence, k: int = 1, metric: str = "correlation", classes=None
) -> KnnModel:
    """Store the (validated) training set; k-NN has no fitting step."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if len(y) != X.shape[0]:
        raise ValueError("one label per row required")
    if k < 1 or X.shape[0] < k:
        raise ValueError("need k >= 1 and at least k training rows")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if metric == "correlation":
        if X.shape[1] < 2:
            raise ValueError("correlation distance needs feature width >= 2")
        _center_unit_rows(X, "training")  # reject constant rows up front
    classes = resolve_classes(y, classes)
    return KnnModel(
        classes=classes,
        n_features=int(X.shape[1]),
        k=int(k),
        metric=metric,
        X=X.copy(),
        y_codes=encode_labels(y, classes),
    )


def _distance_matrix(model: KnnModel, Q: np.ndarray) -> np.ndarray:
    if model.metric == "correlation":
        cq = _center_unit_rows(Q, "query")
        cx = _center_unit_rows(model.X, "training")
        return np.clip(1.0 - cq @ cx.T, 0.0, 2.0)
    # squared euclidean is enough for ranking
    qq = np.sum(Q * Q, axis=1)[:, None]
    xx = np.sum(model.X * model.X, axis=1)[None, :]
    return np.maximum(qq + xx - 2.0 * (Q @ model.X.T), 0.0)


def knn_scores(model: KnnModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vote-fraction scores over the k nearest neighbours.

    Neighbour ties at equal distance resolve toward the lower training
    index (stable sort), keeping predictions deterministic.
    """
    Q = check_width(model.n_features, Q)
    D = _distance_matrix(model, Q)
    order = np.argsort(D, axis=1, kind="stable")[:, : model.k]
    votes = np.zeros((Q.shape[0], len(model.classes)))
    neighbour_codes = model.y_codes[order]
    for c in range(len(model.classes)):
        votes[:, c] = np.sum(neighbour_codes == c, axis=1)
    scores = votes / model.k
    codes = np.argmax(scores, axis=1)
    return codes, scores
