"""Feed-forward network (ReLU hidden layers, softmax output) trained with
Adam on categorical cross-entropy."""

import numpy as np
from scipy.special import log_softmax, softmax

HIDDEN = (12, 6)
EPOCHS = 200
BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


def init_params(sizes, rng):
    """Glorot-uniform weights, zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def forward(params, X):
    acts = [X]
    pre = []
    h = X
    n_layers = len(params) // 2
    for l in range(n_layers):
        z = h @ params[2 * l] + params[2 * l + 1]
        pre.append(z)
        h = np.maximum(z, 0.0) if l < n_layers - 1 else z
        acts.append(h)
    return pre, acts


def loss_and_grad(params, X, Y):
    """Mean cross-entropy and its gradient w.r.t. every parameter array."""
    pre, acts = forward(params, X)
    logits = pre[-1]
    n = X.shape[0]
    loss = -float(np.sum(Y * log_softmax(logits, axis=1))) / n
    delta = (softmax(logits, axis=1) - Y) / n
    grads = [None] * len(params)
    for l in range(len(params) // 2 - 1, -1, -1):
        grads[2 * l] = acts[l].T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params[2 * l].T) * (pre[l - 1] > 0)
    return loss, grads


def fit(X, y, n_classes, hp, rng):
    lr = float(hp.get("learning_rate", 1e-3))
    batch = int(hp.get("batch_size", 32))
    epochs = int(hp.get("epochs", EPOCHS))
    hidden = tuple(hp.get("hidden", HIDDEN))
    params = init_params((X.shape[1],) + hidden + (n_classes,), rng)
    Y = np.eye(n_classes)[y]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0
    n = X.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            _, grads = loss_and_grad(params, X[idx], Y[idx])
            step += 1
            c1 = 1.0 - BETA1 ** step
            c2 = 1.0 - BETA2 ** step
            for k, g in enumerate(grads):
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g
                params[k] = params[k] - lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + ADAM_EPS)
    return {f"p{k}": p for k, p in enumerate(params)}


def _unpack(params):
    return [np.asarray(params[f"p{k}"]) for k in range(len(params))]


def predict_proba(params, X):
    pre, _ = forward(_unpack(params), X)
    return softmax(pre[-1], axis=1)


def predict(params, X):
    pre, _ = forward(_unpack(params), X)
    return np.argmax(pre[-1], axis=1)
