"""The five classifier families: LR, RF, SVC, GBT and MLP.

All families share one surface: :func:`train` standardizes features with
training statistics and fits the family's solver, :func:`predict` maps
rows to labels, and :func:`grid_search` picks the best point of a
hyperparameter lattice by validation weighted F1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DegenerateLabelsError, NumericError, ShapeError
from ..metrics import weighted_f1
from ..serialize import decode_array, encode_array, read_document, write_document
from . import _boost, _forest, _linear, _mlp, _svc

FAMILIES = ("LR", "RF", "SVC", "GBT", "MLP")

_IMPL = {"LR": _linear, "RF": _forest, "SVC": _svc, "GBT": _boost, "MLP": _mlp}

_DEFAULTS = {
    "LR": {"penalty": "l2", "lam": 1.0},
    "RF": {"n_estimators": 8, "max_depth": 5, "max_features": 5},
    "SVC": {"kernel": "rbf", "C": 1.0, "gamma": "scale"},
    "GBT": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
    "MLP": {"learning_rate": 1e-3, "batch_size": 32},
}

_ALLOWED = {
    "LR": {"penalty", "lam", "max_iter"},
    "RF": {"n_estimators", "max_depth", "max_features"},
    "SVC": {"kernel", "C", "gamma", "degree", "coef0"},
    "GBT": {"n_estimators", "max_depth", "learning_rate", "reg_lambda", "min_child_weight"},
    "MLP": {"learning_rate", "batch_size", "epochs", "hidden"},
}


def default_grid(family: str) -> dict:
    """The hyperparameter lattice searched for ``family`` by default."""
    if family == "LR":
        return {"penalty": ["l1", "l2", "none"],
                "lam": [10.0 ** e for e in range(-6, 4)]}
    if family == "RF":
        return {"n_estimators": list(range(2, 9)),
                "max_depth": list(range(3, 8)),
                "max_features": list(range(3, 8))}
    if family == "SVC":
        return {"kernel": ["rbf", "poly", "sigmoid"],
                "C": [0.1, 1.0, 10.0, 100.0],
                "gamma": [1e-4, 1e-3, 1e-2, 1e-1, 1.0, "scale", "auto"]}
    if family == "GBT":
        return {"n_estimators": [50, 100, 150],
                "max_depth": list(range(3, 8)),
                "learning_rate": [0.0005, 0.001, 0.005, 0.01, 0.05, 0.1]}
    if family == "MLP":
        return {"learning_rate": [1e-4, 1e-3, 1e-2],
                "batch_size": [16, 24, 32, 64]}
    raise ConfigError(f"unknown classifier family {family!r}")


def lattice(grid: dict) -> list:
    """Grid points in canonical order (last key varies fastest)."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("empty hyperparameter grid")
    keys = list(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _check_hp(family, hp):
    bad = set(hp) - _ALLOWED[family]
    if bad:
        raise ConfigError(f"{family}: unknown hyperparameters {sorted(bad)}")
    if family == "LR" and hp.get("penalty", "l2") not in ("l1", "l2", "none"):
        raise ConfigError(f"LR penalty must be l1, l2 or none, got {hp['penalty']!r}")
    if family == "LR" and float(hp.get("lam", 1.0)) < 0:
        raise ConfigError("LR lam must be nonnegative")
    if family == "SVC":
        if hp.get("kernel", "rbf") not in ("rbf", "poly", "sigmoid", "linear"):
            raise ConfigError(f"unknown SVC kernel {hp['kernel']!r}")
        if float(hp.get("C", 1.0)) <= 0:
            raise ConfigError("SVC C must be positive")
        g = hp.get("gamma", "scale")
        if not (g in ("scale", "auto") or (not isinstance(g, str) and float(g) > 0)):
            raise ConfigError(f"invalid SVC gamma {g!r}")
    for key in ("n_estimators", "max_depth", "max_features", "batch_size", "epochs"):
        if key in hp and int(hp[key]) < 1:
            raise ConfigError(f"{family}: {key} must be >= 1")
    for key in ("learning_rate",):
        if key in hp and float(hp[key]) <= 0:
            raise ConfigError(f"{family}: {key} must be positive")


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown classifier family {self.family!r}")
        _check_hp(self.family, self.hyperparameters)

    def resolved(self) -> dict:
        hp = dict(_DEFAULTS[self.family])
        hp.update(self.hyperparameters)
        return hp

    def to_dict(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters),
                "seed": int(self.seed)}


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    parameters: dict
    mean: np.ndarray
    std: np.ndarray
    classes: tuple

    def save(self, path):
        write_document(path, "trained_model", {
            "spec": self.spec.to_dict(),
            "classes": list(self.classes),
            "mean": encode_array(self.mean),
            "std": encode_array(self.std),
            "parameters": _encode(self.parameters),
        })

    @classmethod
    def load(cls, path) -> "TrainedModel":
        doc = read_document(path, "trained_model")
        s = doc["spec"]
        return cls(
            spec=ClassifierSpec(s["family"], s["hyperparameters"], s["seed"]),
            parameters=_decode(doc["parameters"]),
            mean=decode_array(doc["mean"]),
            std=decode_array(doc["std"]),
            classes=tuple(doc["classes"]),
        )


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": encode_array(obj)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return decode_array(obj["__array__"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericError("feature matrix contains non-finite values")
    return X


def train(spec: ClassifierSpec, X, y) -> TrainedModel:
    """Fit ``spec`` on features ``X`` (n, d) and labels ``y`` (n,)."""
    X = _as_matrix(X)
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ShapeError(f"{X.shape[0]} feature rows but labels of shape {y.shape}")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = (X - mean) / std
    rng = np.random.default_rng(spec.seed)
    params = _IMPL[spec.family].fit(Z, y_idx, len(classes), spec.resolved(), rng)
    return TrainedModel(spec, params, mean, std, tuple(classes.tolist()))


def predict(model: TrainedModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != len(model.mean):
        raise ShapeError(f"model expects {len(model.mean)} features, got {X.shape[1]}")
    Z = (X - model.mean) / model.std
    idx = _IMPL[model.spec.family].predict(model.parameters, Z)
    return np.asarray(model.classes)[idx]


def _effective_key(family, hp):
    hp = dict(hp)
    if family == "LR" and hp.get("penalty") == "none":
        hp.pop("lam", None)
    return tuple(sorted((k, repr(v)) for k, v in hp.items()))


def point_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def search_splits(family: str, grid: dict, splits: Sequence, seed: int = 0,
                  metric=weighted_f1):
    """Score every grid point by the mean ``metric`` over ``splits``.

    ``splits`` is a sequence of ``((X_tr, y_tr), (X_va, y_va))`` pairs.
    Returns (best ClassifierSpec, list of scores in lattice order). Points
    that differ only in ignored hyperparameters are evaluated once.
    """
    points = lattice(grid)
    scores, cache = [], {}
    for idx, hp in enumerate(points):
        key = _effective_key(family, hp)
        if key not in cache:
            spec = ClassifierSpec(family, hp, point_seed(seed, idx))
            vals = []
            for (Xtr, ytr), (Xva, yva) in splits:
                vals.append(metric(yva, predict(train(spec, Xtr, ytr), Xva)))
            cache[key] = float(np.mean(vals))
        scores.append(cache[key])
    best = int(np.argmax(scores))  # first maximum = canonical-order tie-break
    first = next(i for i, hp in enumerate(points)
                 if _effective_key(family, hp) == _effective_key(family, points[best]))
    return ClassifierSpec(family, points[best], point_seed(seed, first)), scores


def grid_search(family: str, grid, train_set, val_set, seed: int = 0,
                metric=weighted_f1) -> ClassifierSpec:
    """Best grid point by validation ``metric``; ties go to the earliest point."""
    if grid is None:
        grid = default_grid(family)
    y_val = np.asarray(val_set[1])
    if len(np.unique(y_val)) < 2:
        raise DegenerateLabelsError("validation set must contain both classes")
    spec, _ = search_splits(family, grid, [(train_set, val_set)], seed, metric)
    return spec
