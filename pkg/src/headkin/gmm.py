"""Diagonal-covariance Gaussian mixture fitted by EM.

Initialization is k-means++ seeding followed by one hard assignment; the
EM loop itself is plain EM so the training log-likelihood never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateInputError, InsufficientDataError, NumericError

VAR_FLOOR = 1e-6
LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class MixtureFit:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float
    init_loglik: float
    history: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False


def component_log_densities(X, means, variances) -> np.ndarray:
    """(n, K) matrix of ``log N(x_n; mean_k, diag(var_k))``."""
    X = np.atleast_2d(X)
    diff = X[:, None, :] - means[None, :, :]
    maha = np.sum(diff * diff / variances[None, :, :], axis=2)
    logdet = np.sum(np.log(variances), axis=1)
    return -0.5 * (X.shape[1] * LOG_2PI + logdet[None, :] + maha)


def weighted_log_densities(X, weights, means, variances) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return component_log_densities(X, means, variances) + logw[None, :]


def mixture_loglik(X, weights, means, variances) -> float:
    """Total log density of the rows of ``X`` under the mixture."""
    return float(np.sum(logsumexp(weighted_log_densities(X, weights, means, variances), axis=1)))


def posteriors(X, weights, means, variances) -> np.ndarray:
    lj = weighted_log_densities(X, weights, means, variances)
    lj -= logsumexp(lj, axis=1, keepdims=True)
    post = np.exp(lj)
    return post / post.sum(axis=1, keepdims=True)


def kmeanspp_seeds(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``K`` seed rows chosen by D^2 sampling."""
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[idx[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            # every remaining point coincides with a seed
            nxt = int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return np.asarray(idx)


def _init_from_seeds(X, seeds, var_floor):
    n, d = X.shape
    K = len(seeds)
    means = X[seeds].copy()
    global_var = np.maximum(X.var(axis=0), var_floor)
    d2 = np.sum((X[:, None, :] - means[None]) ** 2, axis=2)
    assign = np.argmin(d2, axis=1)
    weights = np.empty(K)
    variances = np.empty((K, d))
    empty = []
    for k in range(K):
        members = X[assign == k]
        weights[k] = len(members)
        if len(members) == 0:
            empty.append(k)
            variances[k] = global_var
            continue
        means[k] = members.mean(axis=0)
        variances[k] = members.var(axis=0) if len(members) > 1 else global_var
    variances = np.maximum(variances, var_floor)
    if empty:
        # re-seed each empty component at the datum with the lowest density
        # under the components that did receive points
        live = np.setdiff1d(np.arange(K), empty)
        w_live = weights[live] / weights[live].sum()
        dens = logsumexp(weighted_log_densities(X, w_live, means[live], variances[live]), axis=1)
        order = np.argsort(dens, kind="stable")
        for k, i in zip(empty, order):
            means[k] = X[i]
            weights[k] = 1.0
    weights = weights / weights.sum()
    return weights, means, variances


def _em(X, weights, means, variances, tol, max_iter, var_floor):
    n = X.shape[0]
    lj = weighted_log_densities(X, weights, means, variances)
    norm = logsumexp(lj, axis=1)
    history = [float(norm.sum()) / n]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        resp = np.exp(lj - norm[:, None])
        nk = resp.sum(axis=0)
        weights = nk / n
        safe = np.maximum(nk, 1e-300)
        means = (resp.T @ X) / safe[:, None]
        sq = (resp.T @ (X * X)) / safe[:, None] - means * means
        variances = np.maximum(sq, var_floor)
        dead = nk <= 1e-300
        if np.any(dead):
            # a vanished component keeps its last location; it carries no mass
            means[dead] = X.mean(axis=0)
            variances[dead] = np.maximum(X.var(axis=0), var_floor)
        lj = weighted_log_densities(X, weights, means, variances)
        norm = logsumexp(lj, axis=1)
        ll = float(norm.sum()) / n
        if not np.isfinite(ll):
            raise NumericError("EM produced a non-finite log-likelihood")
        gain = ll - history[-1]
        history.append(ll)
        if gain < tol:
            converged = True
            break
    return weights, means, variances, history, float(norm.sum()), it, converged


def fit_diag_gmm(
    X: np.ndarray,
    K: int,
    seed=0,
    n_restarts: int = 5,
    tol: float = 1e-6,
    max_iter: int = 300,
    var_floor: float = VAR_FLOOR,
) -> MixtureFit:
    """Fit a ``K``-component diagonal Gaussian mixture to the rows of ``X``.

    Each of ``n_restarts`` runs starts from an independent k-means++ seeding;
    the run with the highest final log-likelihood is returned (ties go to the
    earliest run). ``tol`` applies to the per-sample mean log-likelihood
    gain. ``history`` holds that mean after every iteration, starting with
    the initialization.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DegenerateInputError("mixture data must be a 2-D array")
    n = X.shape[0]
    if K < 1 or n < K:
        raise InsufficientDataError(f"need at least K={K} samples, got {n}")
    if not np.all(np.isfinite(X)):
        raise NumericError("mixture data contains non-finite values")
    children = np.random.SeedSequence(seed).spawn(n_restarts)
    best = None
    for child in children:
        rng = np.random.default_rng(child)
        seeds = kmeanspp_seeds(X, K, rng)
        w, m, v = _init_from_seeds(X, seeds, var_floor)
        init_ll = mixture_loglik(X, w, m, v)
        w, m, v, hist, ll, it, conv = _em(X, w, m, v, tol, max_iter, var_floor)
        fit = MixtureFit(w, m, v, ll, init_ll, hist, it, conv)
        if best is None or fit.loglik > best.loglik:
            best = fit
    return best
