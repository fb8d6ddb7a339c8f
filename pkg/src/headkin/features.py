"""Chunk-level kineme features.

Two feature sets are produced per thin-slice chunk:

* frequency features (``2CKD``): the share of a chunk's segments assigned
  to each of ten class-differentiating kinemes;
* residual features (``HCKD``): eight summary statistics of the absolute
  per-segment reconstruction error, for each of pitch, yaw and roll.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, EmptyInputError, InsufficientDataError, ShapeError
from .kineme import KinemeModel, assign_ids, reconstruct_all
from .segment import Chunk, Segment

STAT_NAMES = ("min", "max", "range", "mean", "median", "std", "skew", "kurt")
DIM_NAMES = ("p", "y", "r")
HCKD_COLUMNS = tuple(f"{d}_{s}" for d in DIM_NAMES for s in STAT_NAMES)
TWOCKD_COLUMNS = tuple(f"k_freq_{i}" for i in range(10))
MODES = ("2CKD", "HCKD")


@dataclass(frozen=True, eq=False)
class KinemeHistogram:
    counts: np.ndarray
    relative: np.ndarray

    @property
    def K(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class DiscriminativeSet:
    control_ids: tuple
    patient_ids: tuple

    @property
    def ids(self) -> tuple:
        return self.control_ids + self.patient_ids


@dataclass(frozen=True)
class ResidualSums:
    s_p: float
    s_y: float
    s_r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s_p, self.s_y, self.s_r])


@dataclass(frozen=True, eq=False)
class ChunkFeatures:
    mode: str
    vector: np.ndarray
    recording_id: str
    chunk_index: int
    label: Optional[str] = None


def histogram_from_counts(counts) -> KinemeHistogram:
    counts = np.asarray(counts, dtype=np.int64)
    total = counts.sum()
    if total <= 0:
        raise EmptyInputError("histogram has no counts")
    return KinemeHistogram(counts, counts / total)


def class_histogram(assignments, K: int) -> KinemeHistogram:
    """Kineme occurrence counts and relative frequencies.

    ``assignments`` may be :class:`~headkin.kineme.KinemeAssignment` objects
    or plain integer kineme ids.
    """
    ids = [getattr(a, "kineme_id", a) for a in assignments]
    if len(ids) == 0:
        raise EmptyInputError("no kineme assignments to histogram")
    ids = np.asarray(ids, dtype=np.int64)
    if ids.min() < 0 or ids.max() >= K:
        raise DomainError(f"kineme ids outside [0, {K})")
    return histogram_from_counts(np.bincount(ids, minlength=K))


def select_discriminative(
    hist_control: KinemeHistogram,
    hist_patient: KinemeHistogram,
    per_class: int = 5,
) -> DiscriminativeSet:
    """Pick the kinemes whose relative frequency differs most between classes.

    Control kinemes are the ``per_class`` largest ``eta_control - eta_patient``,
    patient kinemes the ``per_class`` largest ``eta_patient - eta_control``
    among the rest. Ties go to the lower kineme id.
    """
    if hist_control.K != hist_patient.K:
        raise ShapeError("histograms have different K")
    K = hist_control.K
    if K < 2 * per_class:
        raise InsufficientDataError(f"K={K} is too small to pick {2 * per_class} kinemes")
    # delta scaled by n_c * n_p is an exact integer, so ties are detected
    # exactly and broken by id rather than by float rounding
    nc, npat = int(hist_control.counts.sum()), int(hist_patient.counts.sum())
    delta = [int(c) * npat - int(p) * nc
             for c, p in zip(hist_control.counts, hist_patient.counts)]
    ids = range(K)
    control = sorted(ids, key=lambda k: (-delta[k], k))[:per_class]
    rest = [k for k in ids if k not in control]
    patient = sorted(rest, key=lambda k: (delta[k], k))[:per_class]
    return DiscriminativeSet(tuple(int(i) for i in control), tuple(int(i) for i in patient))


def frequency_vector(kineme_ids, dset: DiscriminativeSet) -> np.ndarray:
    ids = np.asarray(kineme_ids)
    if ids.size == 0:
        raise EmptyInputError("chunk has no segments")
    return np.array([np.count_nonzero(ids == k) for k in dset.ids], dtype=float) / ids.size


def feat_2ckd(chunk: Chunk, model: KinemeModel, dset: DiscriminativeSet) -> ChunkFeatures:
    if chunk.n_segments == 0:
        raise EmptyInputError(f"chunk {chunk.chunk_index} of {chunk.recording_id} is empty")
    vec = frequency_vector(assign_ids(model, chunk.segments), dset)
    return ChunkFeatures("2CKD", vec, chunk.recording_id, chunk.chunk_index, chunk.label)


def residual(segment, recon, center: bool = False) -> ResidualSums:
    """Signed reconstruction error summed over frames, per angle.

    ``center`` must match the model's segment centering so the raw segment
    and its reconstruction live in the same space.
    """
    seg = segment.values if isinstance(segment, Segment) else np.asarray(segment, dtype=float)
    rec = getattr(recon, "values", recon)
    rec = np.asarray(rec, dtype=float)
    if seg.shape != rec.shape:
        raise ShapeError(f"segment shape {seg.shape} != reconstruction shape {rec.shape}")
    if center:
        seg = seg - seg.mean(axis=0)
    s = np.sum(seg - rec, axis=0)
    return ResidualSums(float(s[0]), float(s[1]), float(s[2]))


def stats8(values) -> np.ndarray:
    """min, max, range, mean, median, std, skewness, excess kurtosis.

    Moments are population moments. A constant input has skewness and
    kurtosis 0.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInputError("stats8 of an empty vector")
    lo, hi = float(x.min()), float(x.max())
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    if hi == lo:
        m2 = 0.0
    if m2 * m2 > 0:
        m3 = float(np.mean(dev ** 3))
        m4 = float(np.mean(dev ** 4))
        skew = m3 / m2 ** 1.5
        kurt = m4 / (m2 * m2) - 3.0
    else:  # constant (or variance below the float range): no shape information
        skew, kurt = 0.0, 0.0
    return np.array([lo, hi, hi - lo, mean, float(np.median(x)), np.sqrt(m2), skew, kurt])


def residual_matrix(model: KinemeModel, segments: Sequence[Segment]) -> np.ndarray:
    """(n_segments, 3) signed residual sums for segments against their
    assigned kinemes."""
    ids = assign_ids(model, segments)
    recons = reconstruct_all(model)
    V = np.stack([s.values for s in segments]).astype(float)
    if model.center_segments:
        V = V - V.mean(axis=1, keepdims=True)
    return np.sum(V - recons[ids], axis=1)


def hckd_vector(abs_sums: np.ndarray) -> np.ndarray:
    """24-vector from an (n_c, 3) array of absolute residual sums."""
    return np.concatenate([stats8(abs_sums[:, e]) for e in range(3)])


def feat_hckd(chunk: Chunk, model: KinemeModel) -> ChunkFeatures:
    if chunk.n_segments == 0:
        raise EmptyInputError(f"chunk {chunk.chunk_index} of {chunk.recording_id} is empty")
    abs_sums = np.abs(residual_matrix(model, chunk.segments))
    return ChunkFeatures(
        "HCKD", hckd_vector(abs_sums), chunk.recording_id, chunk.chunk_index, chunk.label
    )


def feature_columns(mode: str) -> tuple:
    if mode == "2CKD":
        return TWOCKD_COLUMNS
    if mode == "HCKD":
        return HCKD_COLUMNS
    raise DomainError(f"unknown feature mode {mode!r}")


def dims_columns(dims: Sequence[str]) -> list:
    """Column indices of the HCKD blocks for the named angle dimensions."""
    names = {"pitch": 0, "p": 0, "yaw": 1, "y": 1, "roll": 2, "r": 2}
    if not dims:
        raise DomainError("empty dimension set")
    blocks = []
    for d in dims:
        if d not in names:
            raise DomainError(f"unknown dimension {d!r}")
        if names[d] not in blocks:
            blocks.append(names[d])
    blocks.sort()
    return [8 * b + j for b in blocks for j in range(8)]


def write_feature_table(features: Sequence[ChunkFeatures], path, mode: str):
    """Delimited feature table in canonical (recording_id, chunk_index) order."""
    cols = feature_columns(mode)
    rows = sorted(features, key=lambda f: (f.recording_id, f.chunk_index))
    with open(path, "w") as fh:
        fh.write(",".join(("recording_id", "chunk_index", "label") + cols) + "\n")
        for f in rows:
            vals = ",".join(format(float(v), ".17g") for v in f.vector)
            fh.write(f"{f.recording_id},{f.chunk_index},{f.label or ''},{vals}\n")


def read_feature_table(path):
    """Inverse of :func:`write_feature_table`; returns (mode, list of ChunkFeatures)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = tuple(header[3:])
        mode = "2CKD" if cols == TWOCKD_COLUMNS else "HCKD" if cols == HCKD_COLUMNS else None
        if mode is None:
            raise ShapeError(f"{path}: unrecognised feature columns")
        out = [
            ChunkFeatures(mode, np.array([float(v) for v in row[3:]]), row[0], int(row[1]), row[2] or None)
            for row in reader if row
        ]
    return mode, out
