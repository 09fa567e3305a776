"""Multiclass AdaBoost (SAMME) over weighted decision trees.

Round t fits a tree on the current sample weights, measures its weighted
error eps_t, and keeps it with coefficient

    alpha_t = learn_rate * (ln((1 - eps_t) / eps_t) + ln(K - 1))

for K classes. Sample weights of misclassified points are multiplied by
exp(alpha_t) and the distribution renormalised to sum 1. Rounds whose
error reaches 1 - 1/K (no better than chance) are discarded and boosting
stops; a perfect round (eps_t = 0) also stops boosting since the weight
distribution would no longer change. Scores are the softmax of the
alpha-weighted vote totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import (
    WeakLearnerFailureError,
    check_width,
    encode_labels,
    resolve_classes,
    softmax,
)
from .tree import DecisionTree, fit_tree, tree_predict

_EPS_FLOOR = 1e-12  # keeps alpha finite when a round is perfect


@dataclass(eq=False)
class AdaBoostModel:
    classes: tuple
    n_features: int
    learn_rate: float
    max_splits: int
    trees: list[DecisionTree]
    alphas: np.ndarray
    errors: np.ndarray        # weighted error of each kept round
    weight_sums: np.ndarray   # distribution total after each renormalisation


def adaboost_train(
    X: np.ndarray,
    y: Sequence,
    n_learners: int = 466,
    max_splits: int = 132,
    learn_rate: float = 0.1241,
    classes=None,
) -> AdaBoostModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if n_learners < 1 or max_splits < 1 or learn_rate <= 0:
        raise ValueError("n_learners, max_splits >= 1 and learn_rate > 0 required")
    classes = resolve_classes(y, classes)
    K = len(classes)
    if K < 2:
        raise ValueError("boosting needs at least two classes")
    codes = encode_labels(y, classes)

    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    chance = 1.0 - 1.0 / K

    trees: list[DecisionTree] = []
    alphas: list[float] = []
    errors: list[float] = []
    weight_sums: list[float] = []

    for t in range(n_learners):
        tree = fit_tree(X, codes, w, K, max_splits)
        pred = tree_predict(tree, X)
        incorrect = pred != codes
        eps = float(w[incorrect].sum())

        if eps >= chance:
            if t == 0:
                raise WeakLearnerFailureError(
                    f"first weak learner error {eps:.4f} is not better than chance"
                )
            break  # discard this round and stop

        eps_f = max(eps, _EPS_FLOOR)
        alpha = learn_rate * (math.log((1.0 - eps_f) / eps_f) + math.log(K - 1))
        trees.append(tree)
        alphas.append(alpha)
        errors.append(eps)

        w = w * np.exp(alpha * incorrect)
        w = w / w.sum()
        weight_sums.append(float(w.sum()))
        if eps == 0.0:
            break  # weights unchanged; later rounds would repeat this tree

    return AdaBoostModel(
        classes=classes,
        n_features=int(X.shape[1]),
        learn_rate=learn_rate,
        max_splits=max_splits,
        trees=trees,
        alphas=np.array(alphas),
        errors=np.array(errors),
        weight_sums=np.array(weight_sums),
    )


def adaboost_scores(model: AdaBoostModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Probability scores: softmax over alpha-weighted votes."""
    Q = check_width(model.n_features, Q)
    K = len(model.classes)
    votes = np.zeros((Q.shape[0], K))
    for tree, alpha in zip(model.trees, model.alphas):
        pred = tree_predict(tree, Q)
        votes[np.arange(Q.shape[0]), pred] += alpha
    scores = softmax(votes)
    return np.argmax(scores, axis=1), scores
