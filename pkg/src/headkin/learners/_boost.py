"""Gradient-boosted trees with logistic (or softmax) loss.

Each stage fits one regression tree per output on the gradient and
hessian of the loss (exact greedy splits, Newton leaf weights), scaled by
the learning rate.
"""

import numpy as np
from scipy.special import expit, log_softmax, softmax

from ._tree import Tree, grow_tree, newton_score


def _n_outputs(n_classes):
    return 1 if n_classes == 2 else n_classes


def _init_score(y, n_classes):
    prior = np.bincount(y, minlength=n_classes) / len(y)
    prior = np.clip(prior, 1e-12, 1.0)
    if n_classes == 2:
        return np.array([np.log(prior[1] / prior[0])])
    return np.log(prior)


def loss(F, y, n_classes) -> float:
    """Mean logistic / softmax cross-entropy of raw scores ``F``."""
    if n_classes == 2:
        f = F[:, 0]
        return float(np.mean(np.logaddexp(0.0, f) - y * f))
    return float(-np.mean(log_softmax(F, axis=1)[np.arange(len(y)), y]))


def _grad_hess(F, y, n_classes):
    if n_classes == 2:
        p = expit(F[:, 0])
        return [(p - y, p * (1.0 - p))]
    P = softmax(F, axis=1)
    Y = np.eye(n_classes)[y]
    return [(P[:, k] - Y[:, k], P[:, k] * (1.0 - P[:, k])) for k in range(n_classes)]


def fit(X, y, n_classes, hp, rng, loss_trace=None):
    n_estimators = int(hp["n_estimators"])
    max_depth = int(hp["max_depth"])
    lr = float(hp["learning_rate"])
    lam = float(hp.get("reg_lambda", 1.0))
    mcw = float(hp.get("min_child_weight", 1.0))
    base = _init_score(y, n_classes)
    F = np.tile(base, (X.shape[0], 1))
    if loss_trace is not None:
        loss_trace.append(loss(F, y, n_classes))
    stages = []
    for _ in range(n_estimators):
        stage = []
        for k, (g, h) in enumerate(_grad_hess(F, y, n_classes)):
            S = np.column_stack([g, h])
            tree = grow_tree(
                X, S, max_depth,
                leaf_value=lambda s: -s[:, 0].sum() / (s[:, 1].sum() + lam),
                score=lambda s: newton_score(s, lam),
                min_child=lambda s: s[..., 1] >= mcw,
                min_gain=0.0,
            )
            F[:, k] += lr * tree.predict(X)
            stage.append(tree)
        stages.append(stage)
        if loss_trace is not None:
            loss_trace.append(loss(F, y, n_classes))
    return {
        "base": base,
        "learning_rate": lr,
        "stages": [[t.to_arrays() for t in stage] for stage in stages],
    }


def decision_function(params, X):
    base = np.asarray(params["base"], dtype=float)
    F = np.tile(base, (X.shape[0], 1))
    lr = float(params["learning_rate"])
    for stage in params["stages"]:
        for k, t in enumerate(stage):
            F[:, k] += lr * Tree.from_arrays(t).predict(X)
    return F


def predict(params, X):
    F = decision_function(params, X)
    if F.shape[1] == 1:
        return (F[:, 0] > 0).astype(int)
    return np.argmax(F, axis=1)
