"""Random forest of bagged, depth-limited Gini trees."""

import numpy as np

from ._tree import Tree, gini_score, grow_tree


def _pure(S):
    return np.count_nonzero(S.sum(axis=0)) <= 1


def fit(X, y, n_classes, hp, rng):
    n_estimators = int(hp["n_estimators"])
    max_depth = int(hp["max_depth"])
    max_features = min(int(hp["max_features"]), X.shape[1])
    onehot = np.eye(n_classes)[y]
    n = X.shape[0]
    trees = []
    for _ in range(n_estimators):
        rows = rng.integers(0, n, size=n)
        S = onehot[rows]
        tree = grow_tree(
            X[rows], S, max_depth,
            leaf_value=lambda s: s.sum(axis=0) / s.shape[0],
            score=gini_score,
            min_child=lambda s: s.sum(axis=-1) >= 1,
            max_features=max_features,
            rng=rng,
            min_gain=1e-12,
            stop=_pure,
        )
        trees.append(tree)
    return {"trees": [t.to_arrays() for t in trees]}


def predict_proba(params, X):
    trees = [Tree.from_arrays(t) for t in params["trees"]]
    return np.mean([t.predict(X) for t in trees], axis=0)


def predict(params, X):
    return np.argmax(predict_proba(params, X), axis=1)
