"""Axis-aligned decision tree used as the boosting weak learner.

Grown breadth-first (queue order) up to a budget of internal splits.
Split quality is weighted Gini impurity decrease; the scan over all
(feature, threshold) candidates is vectorised per node. Ties resolve
toward the lowest feature index, then the lowest cut position, so
growth is fully deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class DecisionTree:
    """Flat array representation: node i is a leaf iff feature[i] < 0."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray
    n_classes: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_splits(self) -> int:
        return int(np.sum(self.feature >= 0))


def _weighted_majority(class_weights: np.ndarray) -> int:
    return int(np.argmax(class_weights))  # first max = lowest class index


def _best_split(Xn: np.ndarray, wy: np.ndarray):
    """Best (feature, threshold, gain) over all candidate cuts, or None.

    ``wy`` is the (m, K) per-sample class weight matrix. Impurity of a
    set with class weights W_k is  W - sum_k W_k^2 / W  (weighted Gini),
    so gain = imp(parent) - imp(left) - imp(right).
    """
    m, n_features = Xn.shape
    if m < 2:
        return None

    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)
    Ws = wy[order]                      # (m, F, K) sorted class weights
    cum = np.cumsum(Ws, axis=0)[:-1]    # left side at cut i = first i+1 rows
    totals = wy.sum(axis=0)             # (K,)
    total_w = float(totals.sum())

    WL = cum.sum(axis=2)
    WR = total_w - WL
    with np.errstate(divide="ignore", invalid="ignore"):
        impL = WL - np.sum(cum**2, axis=2) / WL
        impR = WR - np.sum((totals[None, None, :] - cum) ** 2, axis=2) / WR
    imp_parent = total_w - float(np.sum(totals**2)) / total_w if total_w > 0 else 0.0
    gain = imp_parent - impL - impR
    gain[~np.isfinite(gain)] = -np.inf
    gain[Xs[1:] == Xs[:-1]] = -np.inf   # equal adjacent values admit no cut

    flat = np.argmax(gain.T)            # feature-major: lowest feature wins ties
    f, cut = divmod(int(flat), m - 1)
    best_gain = gain[cut, f]
    if not np.isfinite(best_gain) or best_gain <= 0.0:
        return None
    lo, hi = Xs[cut, f], Xs[cut + 1, f]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:                 # rounding may hit the upper value
        threshold = lo
    return f, float(threshold), float(best_gain)


def fit_tree(
    X: np.ndarray, y_codes: np.ndarray, w: np.ndarray, n_classes: int, max_splits: int
) -> DecisionTree:
    """Grow a weighted CART tree with at most ``max_splits`` internal splits."""
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    n = X.shape[0]
    wy_all = np.zeros((n, n_classes))
    wy_all[np.arange(n), y_codes] = w

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_class: list[int] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        return len(feature) - 1

    root = new_node()
    queue: deque[tuple[int, np.ndarray]] = deque([(root, np.arange(n))])
    splits_done = 0

    while queue:
        node, idx = queue.popleft()
        class_w = wy_all[idx].sum(axis=0)
        split = None
        if splits_done < max_splits and np.count_nonzero(class_w) > 1:
            split = _best_split(X[idx], wy_all[idx])
        if split is None:
            leaf_class[node] = _weighted_majority(class_w)
            continue
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        splits_done += 1
        queue.append((left[node], idx[go_left]))
        queue.append((right[node], idx[~go_left]))

    return DecisionTree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        leaf_class=np.array(leaf_class, dtype=np.intp),
        n_classes=n_classes,
    )


def tree_predict(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Class codes for each row, by iterative level-wise descent."""
    X = np.asarray(X, dtype=float)
    node = np.zeros(X.shape[0], dtype=np.intp)
    while True:
        active = tree.feature[node] >= 0
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, tree.feature[cur]] <= tree.threshold[cur]
        node[rows] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.leaf_class[node]
