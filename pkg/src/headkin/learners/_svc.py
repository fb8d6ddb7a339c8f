"""Support vector classifier trained by sequential minimal optimization.

The solver follows the second-order working-set selection of Fan, Chen &
Lin (2005): pick the maximal violator ``i``, then the ``j`` giving the
largest guaranteed decrease of the dual objective, and solve the two-
variable subproblem analytically with box clipping. Multi-class problems
are handled one-vs-rest.
"""

import numpy as np
from numba import njit

EPS = 1e-3
TAU = 1e-12
DEGREE = 3
COEF0 = 0.0


def resolve_gamma(gamma, X):
    if gamma == "scale":
        var = float(X.var())
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    if gamma == "auto":
        return 1.0 / X.shape[1]
    return float(gamma)


def kernel_matrix(A, B, kernel, gamma, degree=DEGREE, coef0=COEF0):
    if kernel == "rbf":
        d2 = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        return np.exp(-gamma * np.maximum(d2, 0.0))
    if kernel == "poly":
        return (gamma * (A @ B.T) + coef0) ** degree
    if kernel == "sigmoid":
        return np.tanh(gamma * (A @ B.T) + coef0)
    if kernel == "linear":
        return A @ B.T
    raise ValueError(f"unknown kernel {kernel!r}")


@njit(cache=True)
def _smo(K, y, C, eps, tau, max_iter, record):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    trace = np.empty(max_iter + 1 if record else 1)
    n_trace = 0
    if record:
        trace[0] = 0.0
        n_trace = 1
    it = 0
    while it < max_iter:
        # maximal violating index i over I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * G[t]
                if v < gmin:
                    gmin = v
                if i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = tau
                        obj = -(b * b) / a
                        if obj < best:
                            best = obj
                            j = t
        if i < 0 or j < 0 or gmax - gmin < eps:
            break
        it += 1

        Qij = y[i] * y[j] * K[i, j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * Qij
            if quad <= 0:
                quad = tau
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Qij
            if quad <= 0:
                quad = tau
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * dai + y[j] * K[t, j] * daj)
        if record:
            f = 0.0
            for t in range(n):
                f += alpha[t] * (G[t] - 1.0)
            trace[n_trace] = 0.5 * f
            n_trace += 1
    return alpha, G, it, trace[:n_trace]


def rho_from(alpha, G, y, C):
    yG = y * G
    at_ub = alpha >= C
    at_lb = alpha <= 0
    free = ~(at_ub | at_lb)
    if np.any(free):
        return float(np.mean(yG[free]))
    ub_set = (at_ub & (y < 0)) | (at_lb & (y > 0))
    lb_set = (at_ub & (y > 0)) | (at_lb & (y < 0))
    ub = np.min(yG[ub_set]) if np.any(ub_set) else np.inf
    lb = np.max(yG[lb_set]) if np.any(lb_set) else -np.inf
    if np.isinf(ub) or np.isinf(lb):
        return float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return float(0.5 * (ub + lb))


def kkt_gap(alpha, G, y, C) -> float:
    """``m(alpha) - M(alpha)``: the maximal KKT violation of a dual point."""
    v = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return 0.0
    return float(v[up].max() - v[low].min())


def solve_binary(K, y, C, eps=EPS, max_iter=None, record=False):
    """Solve one dual problem; ``y`` in {-1, +1}.

    Returns (alpha, rho, gradient, iterations, trace) where ``trace`` holds
    the dual objective ``0.5 a'Qa - sum(a)`` after every step when
    ``record`` is set (it is minimized, so it must not increase).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if max_iter is None:
        max_iter = max(10000, 100 * n)
    alpha, G, it, trace = _smo(np.ascontiguousarray(K, dtype=float), y, float(C),
                               float(eps), TAU, int(max_iter), bool(record))
    return alpha, rho_from(alpha, G, y, C), G, it, trace


def fit(X, y, n_classes, hp, rng=None):
    kernel = hp.get("kernel", "rbf")
    C = float(hp.get("C", 1.0))
    gamma = resolve_gamma(hp.get("gamma", "scale"), X)
    degree = int(hp.get("degree", DEGREE))
    coef0 = float(hp.get("coef0", COEF0))
    K = kernel_matrix(X, X, kernel, gamma, degree, coef0)
    targets = [1] if n_classes == 2 else list(range(n_classes))
    coefs, rhos, svs = [], [], []
    for c in targets:
        yy = np.where(y == c, 1.0, -1.0)
        alpha, rho, _, _, _ = solve_binary(K, yy, C)
        coefs.append(alpha * yy)
        rhos.append(rho)
    coef = np.array(coefs)
    keep = np.any(coef != 0, axis=0)
    return {
        "kernel": kernel, "gamma": gamma, "degree": degree, "coef0": coef0,
        "support": X[keep], "dual_coef": coef[:, keep], "rho": np.array(rhos),
    }


def decision_function(params, X):
    sv = np.asarray(params["support"])
    if sv.shape[0] == 0:
        return -np.tile(np.asarray(params["rho"]), (X.shape[0], 1))
    Kx = kernel_matrix(X, sv, params["kernel"], float(params["gamma"]),
                       int(params["degree"]), float(params["coef0"]))
    return Kx @ np.asarray(params["dual_coef"]).T - np.asarray(params["rho"])[None, :]


def predict(params, X):
    F = decision_function(params, X)
    if F.shape[1] == 1:
        return (F[:, 0] > 0).astype(int)
    return np.argmax(F, axis=1)
