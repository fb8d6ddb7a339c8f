"""Exact-greedy binary decision trees over additive node statistics.

A tree is grown from a per-sample statistics matrix ``S`` (one-hot class
counts for classification, gradient/hessian pairs for boosting). For every
candidate feature the samples are sorted, the statistics are cumulated,
and every cut between distinct values is scored with ``score(left) +
score(right) - score(parent)``.
"""

from __future__ import annotations

import numpy as np


class Tree:
    """Flat-array tree: node ``i`` is a leaf when ``feature[i] == -1``."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_arrays(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right, "value": self.value}

    @classmethod
    def from_arrays(cls, d) -> "Tree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def gini_score(S: np.ndarray) -> np.ndarray:
    """Negative Gini impurity mass; rows of ``S`` are class counts."""
    n = S.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sum(S * S, axis=-1) / n
    return np.where(n > 0, out, 0.0)


def newton_score(S: np.ndarray, reg_lambda: float) -> np.ndarray:
    """Structure score ``G^2 / (H + lambda)``; rows of ``S`` are (g, h)."""
    return S[..., 0] ** 2 / (S[..., 1] + reg_lambda)


def best_split(X, S, features, score, min_child):
    """Best (gain, feature, threshold) over ``features``; gain is -inf if none.

    Ties resolve to the first feature in ``features``, then the lowest cut.
    """
    features = np.asarray(list(features), dtype=np.int64)
    parent = score(S.sum(axis=0))
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    cum = np.cumsum(S[order], axis=0)  # (n, f, s)
    left = cum[:-1]
    right = cum[-1][None] - left
    ok = (xs[1:] > xs[:-1]) & min_child(left) & min_child(right)
    if not np.any(ok):
        return (-np.inf, -1, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = score(left) + score(right) - parent
    gain = np.where(ok, gain, -np.inf).T  # (f, n-1)
    flat = int(np.argmax(gain))
    fi, k = divmod(flat, gain.shape[1])
    lo, hi = xs[k, fi], xs[k + 1, fi]
    thr = 0.5 * (lo + hi)
    # guard against midpoint rounding onto the right value
    if thr >= hi:
        thr = lo
    return (float(gain[fi, k]), int(features[fi]), float(thr))


def grow_tree(
    X: np.ndarray,
    S: np.ndarray,
    max_depth: int,
    leaf_value,
    score,
    min_child,
    max_features=None,
    rng=None,
    min_gain: float = 0.0,
    stop=None,
) -> Tree:
    """Grow a depth-limited tree depth-first (left child first).

    ``leaf_value(S_node)`` gives the stored node value; ``max_features``
    features are drawn without replacement at every node when set.
    ``stop(S_node)`` may declare a node terminal early (e.g. purity).
    """
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(S[idx]))
        return len(feature) - 1

    root = np.arange(X.shape[0])
    stack = [(new_node(root), root, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or len(idx) < 2 or (stop is not None and stop(S[idx])):
            continue
        if max_features is not None and max_features < n_features:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            feats = range(n_features)
        gain, f, thr = best_split(X[idx], S[idx], feats, score, min_child)
        if f < 0 or not gain > min_gain:
            continue
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        lnode = new_node(li)
        rnode = new_node(ri)
        left[node], right[node] = lnode, rnode
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))
    return Tree(feature, threshold, left, right, np.asarray(value))
