"""Kineme discovery: a linear subspace of flattened head-pose segments with
a diagonal Gaussian mixture on top.

A segment of ``seg_len`` frames is flattened to ``[pitch | yaw | roll]``,
offset by the training mean and projected onto the leading principal
directions. Each mixture component is a kineme; its centre maps back to
an angle trajectory through the transpose of the (orthonormal)
projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    InsufficientDataError,
    ShapeError,
)
from .gmm import VAR_FLOOR, fit_diag_gmm, mixture_loglik, posteriors
from .segment import Segment
from .serialize import decode_array, encode_array, read_document, write_document


def flatten(segment, center: bool = True) -> np.ndarray:
    """``(seg_len, 3)`` angles to a ``3 * seg_len`` vector, blocks ordered
    pitch, yaw, roll. With ``center`` each block has its mean removed."""
    values = segment.values if isinstance(segment, Segment) else np.asarray(segment)
    v = np.asarray(values, dtype=float)
    if center:
        v = v - v.mean(axis=0)
    return v.T.reshape(-1)


def unflatten(vector, seg_len: int) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (3 * seg_len,):
        raise ShapeError(f"expected a vector of length {3 * seg_len}, got {vector.shape}")
    return vector.reshape(3, seg_len).T.copy()


def flatten_many(segments: Sequence, center: bool = True) -> np.ndarray:
    """Row-wise :func:`flatten` for a list of equal-length segments."""
    if len(segments) == 0:
        return np.empty((0, 0))
    lengths = {s.values.shape for s in segments}
    if len(lengths) != 1:
        raise ShapeError(f"segments have differing shapes: {sorted(lengths)}")
    V = np.stack([s.values for s in segments]).astype(float)
    if center:
        V = V - V.mean(axis=1, keepdims=True)
    return V.transpose(0, 2, 1).reshape(len(segments), -1)


@dataclass(frozen=True, eq=False)
class KinemeModel:
    K: int
    seg_len_frames: int
    fps: float
    center_offset: np.ndarray
    projection: np.ndarray
    mixture_weights: np.ndarray
    mixture_means: np.ndarray
    mixture_variances: np.ndarray
    train_loglik: float
    center_segments: bool = False
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("center_offset", "projection", "mixture_weights",
                     "mixture_means", "mixture_variances"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dim(self) -> int:
        return self.projection.shape[0]

    def project(self, flat: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(flat) - self.center_offset) @ self.projection.T

    def save(self, path):
        write_document(path, "kineme_model", {
            "K": self.K,
            "seg_len_frames": self.seg_len_frames,
            "fps": self.fps,
            "d": self.dim,
            "center_segments": self.center_segments,
            "train_loglik": format(self.train_loglik, ".17g"),
            "config": self.config,
            "center_offset": encode_array(self.center_offset),
            "projection": encode_array(self.projection),
            "mixture_weights": encode_array(self.mixture_weights),
            "mixture_means": encode_array(self.mixture_means),
            "mixture_variances": encode_array(self.mixture_variances),
        })

    @classmethod
    def load(cls, path) -> "KinemeModel":
        doc = read_document(path, "kineme_model")
        return cls(
            K=int(doc["K"]),
            seg_len_frames=int(doc["seg_len_frames"]),
            fps=float(doc["fps"]),
            center_offset=decode_array(doc["center_offset"]),
            projection=decode_array(doc["projection"]),
            mixture_weights=decode_array(doc["mixture_weights"]),
            mixture_means=decode_array(doc["mixture_means"]),
            mixture_variances=decode_array(doc["mixture_variances"]),
            train_loglik=float(doc["train_loglik"]),
            center_segments=bool(doc["center_segments"]),
            config=doc.get("config", {}),
        )


@dataclass(frozen=True, eq=False)
class KinemeAssignment:
    segment: Segment
    kineme_id: int
    posterior: np.ndarray


@dataclass(frozen=True, eq=False)
class Reconstruction:
    values: np.ndarray  # (seg_len, 3): pitch, yaw, roll


def _choose_dim(explained: np.ndarray, subspace_dim, cap: int) -> int:
    if isinstance(subspace_dim, (int, np.integer)) and not isinstance(subspace_dim, bool):
        if subspace_dim < 1:
            raise DomainError(f"subspace_dim must be >= 1, got {subspace_dim}")
        return int(min(subspace_dim, cap))
    target = float(subspace_dim)
    if not 0 < target <= 1:
        raise DomainError(f"variance target must lie in (0, 1], got {target}")
    frac = np.cumsum(explained) / explained.sum()
    d = int(np.searchsorted(frac, target - 1e-12) + 1)
    return min(d, cap)


def fit_kineme_model(
    segments: Sequence[Segment],
    K: int = 16,
    subspace_dim: Union[int, float] = 0.95,
    seed=0,
    n_restarts: int = 5,
    center_segments: bool = False,
    fps: float = 30.0,
) -> KinemeModel:
    """Learn ``K`` kinemes from a pool of equal-length segments.

    ``subspace_dim`` is either the number of principal directions (int) or
    the fraction of variance they must explain (float). Requires at least
    ``10 * K`` segments.
    """
    if K < 2:
        raise DomainError(f"K must be at least 2, got {K}")
    n = len(segments)
    if n < 10 * K:
        raise InsufficientDataError(f"{n} segments is fewer than 10*K = {10 * K}")
    X = flatten_many(segments, center=center_segments)
    seg_len = X.shape[1] // 3
    offset = X.mean(axis=0)
    Xc = X - offset
    scale = 1.0 + float(np.max(np.abs(X)))
    if float(np.max(np.abs(Xc))) <= 1e-12 * scale:
        raise DegenerateInputError("training segments have zero variance")

    _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    # fix the sign of each direction for reproducibility
    flip = np.sign(Vt[np.arange(len(Vt)), np.argmax(np.abs(Vt), axis=1)])
    Vt = Vt * flip[:, None]
    explained = S ** 2
    rank = int(np.sum(S > S[0] * 1e-10))
    d = _choose_dim(explained, subspace_dim, min(3 * seg_len, n, rank))
    P = Vt[:d]
    Z = Xc @ P.T

    fit = fit_diag_gmm(Z, K, seed=seed, n_restarts=n_restarts)
    config = {
        "K": K,
        "subspace_dim": subspace_dim,
        "n_restarts": n_restarts,
        "seed": seed if isinstance(seed, (int, np.integer)) else None,
        "center_segments": center_segments,
        "variance_floor": VAR_FLOOR,
        "n_segments": n,
        "explained_variance": float(explained[:d].sum() / explained.sum()),
        "init_loglik": fit.init_loglik,
        "em_iterations": fit.n_iter,
    }
    return KinemeModel(
        K=K,
        seg_len_frames=seg_len,
        fps=float(fps),
        center_offset=offset,
        projection=P,
        mixture_weights=fit.weights,
        mixture_means=fit.means,
        mixture_variances=fit.variances,
        train_loglik=fit.loglik,
        center_segments=center_segments,
        config=config,
    )


def _check_length(model: KinemeModel, segments):
    for s in segments:
        if s.values.shape != (model.seg_len_frames, 3):
            raise ShapeError(
                f"segment shape {s.values.shape} does not match model "
                f"({model.seg_len_frames}, 3)"
            )


def posterior_matrix(model: KinemeModel, segments: Sequence[Segment]) -> np.ndarray:
    """(n_segments, K) kineme posteriors."""
    _check_length(model, segments)
    Z = model.project(flatten_many(segments, center=model.center_segments))
    return posteriors(Z, model.mixture_weights, model.mixture_means, model.mixture_variances)


def assign_ids(model: KinemeModel, segments: Sequence[Segment]) -> np.ndarray:
    if len(segments) == 0:
        return np.empty(0, dtype=int)
    return np.argmax(posterior_matrix(model, segments), axis=1)


def assign_kineme(model: KinemeModel, segment: Segment) -> KinemeAssignment:
    post = posterior_matrix(model, [segment])[0]
    return KinemeAssignment(segment, int(np.argmax(post)), post)


def reconstruct(model: KinemeModel, kineme_id: int) -> Reconstruction:
    """Back-project kineme ``kineme_id``'s mixture mean to angle space."""
    if not (0 <= int(kineme_id) < model.K) or int(kineme_id) != kineme_id:
        raise DomainError(f"kineme id {kineme_id} outside [0, {model.K})")
    flat = model.projection.T @ model.mixture_means[int(kineme_id)] + model.center_offset
    values = unflatten(flat, model.seg_len_frames)
    values.setflags(write=False)
    return Reconstruction(values)


def reconstruct_all(model: KinemeModel) -> np.ndarray:
    """(K, seg_len, 3) array of every kineme trajectory."""
    return np.stack([reconstruct(model, k).values for k in range(model.K)])


def em_loglik(model: KinemeModel, projected_segments) -> float:
    Z = np.atleast_2d(np.asarray(projected_segments, dtype=float))
    if Z.shape[1] != model.dim:
        raise ShapeError(f"projected data has {Z.shape[1]} columns, model has d={model.dim}")
    return mixture_loglik(Z, model.mixture_weights, model.mixture_means, model.mixture_variances)
