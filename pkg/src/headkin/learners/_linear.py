"""Regularized logistic regression (binary logistic or multinomial softmax).

Minimizes mean negative log-likelihood plus ``lam * penalty(W)`` with
accelerated proximal gradient (FISTA). The intercept is not penalized;
``l1`` is handled by soft-thresholding.
"""

import numpy as np
from scipy.special import expit, log_softmax, softmax

MAX_ITER = 2000
TOL = 1e-8


def _n_outputs(n_classes):
    return 1 if n_classes == 2 else n_classes


def _probs(Xb, W, n_classes):
    Z = Xb @ W
    if n_classes == 2:
        return expit(Z)
    return softmax(Z, axis=1)


def objective(W, Xb, Y, n_classes, penalty, lam):
    Z = Xb @ W
    if n_classes == 2:
        nll = np.mean(np.logaddexp(0.0, Z[:, 0]) - Y[:, 0] * Z[:, 0])
    else:
        nll = -np.mean(np.sum(Y * log_softmax(Z, axis=1), axis=1))
    w = W[:-1]
    if penalty == "l2":
        nll += 0.5 * lam * np.sum(w * w)
    elif penalty == "l1":
        nll += lam * np.sum(np.abs(w))
    return float(nll)


def fit(X, y, n_classes, hp, rng=None):
    penalty = hp.get("penalty", "l2")
    lam = float(hp.get("lam", 1.0)) if penalty != "none" else 0.0
    max_iter = int(hp.get("max_iter", MAX_ITER))
    n, d = X.shape
    Xb = np.column_stack([X, np.ones(n)])
    k = _n_outputs(n_classes)
    Y = (y[:, None] == 1).astype(float) if k == 1 else np.eye(n_classes)[y]

    smax = np.linalg.norm(Xb, 2)
    L = (0.25 if k == 1 else 0.5) * smax * smax / n
    if penalty == "l2":
        L += lam
    step = 1.0 / L

    W = np.zeros((d + 1, k))
    V = W.copy()
    t = 1.0
    for _ in range(max_iter):
        P = _probs(Xb, V, n_classes)
        grad = Xb.T @ (P - Y) / n
        if penalty == "l2":
            grad[:-1] += lam * V[:-1]
        W_new = V - step * grad
        if penalty == "l1":
            w = W_new[:-1]
            W_new[:-1] = np.sign(w) * np.maximum(np.abs(w) - step * lam, 0.0)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        V = W_new + ((t - 1.0) / t_new) * (W_new - W)
        delta = np.max(np.abs(W_new - W))
        W, t = W_new, t_new
        if delta < TOL:
            break
    return {"W": W}


def decision_function(params, X):
    W = np.asarray(params["W"])
    return X @ W[:-1] + W[-1]


def predict(params, X):
    Z = decision_function(params, X)
    if Z.shape[1] == 1:
        return (Z[:, 0] > 0).astype(int)
    return np.argmax(Z, axis=1)
