"""Loading of head-pose time series and subject manifests.

Pose files are delimited text with one row per tracked frame (the layout
produced by common face trackers). Angles are kept in radians internally;
the :class:`PoseSchema` declares the source units.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DomainError,
    EmptyInputError,
    ParseError,
    SchemaError,
    UnusableSeriesError,
)

CANONICAL_FPS = 30.0
DEFAULT_MAX_GAP_S = 0.5

BINARY_LABELS = ("control", "depressed")
BANDS = ("minimal", "mild", "moderate", "severe")
SPLITS = ("train", "dev", "test")


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HeadPoseSeries:
    """Per-frame pitch/yaw/roll angles (radians) of one recording."""

    subject_id: str
    recording_id: str
    fps: float
    pitch: np.ndarray
    yaw: np.ndarray
    roll: np.ndarray
    valid_mask: np.ndarray

    def __post_init__(self):
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise DataError(f"fps must be positive, got {self.fps}")
        arrays = {}
        for name in ("pitch", "yaw", "roll"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise DataError(f"{name} must be one-dimensional")
            arrays[name] = a
        mask = np.asarray(self.valid_mask, dtype=bool)
        n = len(mask)
        if n < 1:
            raise EmptyInputError("head-pose series is empty")
        for name, a in arrays.items():
            if len(a) != n:
                raise DataError(f"{name} has length {len(a)}, expected {n}")
            if not np.all(np.isfinite(a)):
                raise DataError(f"{name} contains non-finite values")
            if np.any(np.abs(a) >= np.pi):
                raise DataError(f"{name} has angles outside (-pi, pi)")
            object.__setattr__(self, name, _frozen(a))
        object.__setattr__(self, "valid_mask", _frozen(mask))
        object.__setattr__(self, "fps", float(self.fps))

    def __len__(self):
        return len(self.valid_mask)

    @property
    def duration_s(self) -> float:
        return len(self) / self.fps

    def angles(self) -> np.ndarray:
        """Return an (n_frames, 3) array with columns pitch, yaw, roll."""
        return np.column_stack([self.pitch, self.yaw, self.roll])


@dataclass(frozen=True)
class PoseSchema:
    """Column mapping for pose files.

    ``success`` may be ``None`` when the file carries no tracker flag;
    ``units`` is either ``"radians"`` or ``"degrees"``.
    """

    pitch: str = "pose_pitch"
    yaw: str = "pose_yaw"
    roll: str = "pose_roll"
    success: Optional[str] = "success"
    frame: Optional[str] = "frame"
    timestamp: Optional[str] = "timestamp"
    units: str = "radians"
    delimiter: str = ","

    def __post_init__(self):
        if self.units not in ("radians", "degrees"):
            raise ConfigError(f"unknown angle units {self.units!r}")

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "PoseSchema":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**d)


def load_headpose_csv(
    path,
    schema: PoseSchema = PoseSchema(),
    fps: Optional[float] = None,
    subject_id: Optional[str] = None,
    recording_id: Optional[str] = None,
) -> HeadPoseSeries:
    """Read one pose file into a :class:`HeadPoseSeries`.

    Rows whose tracker flag is zero, or whose angles are non-finite, are
    kept as invalid frames (value 0, mask false) so frame timing is
    preserved. When ``fps`` is omitted it is inferred from the timestamp
    column.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"pose file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"pose file is empty: {path}")
        header = [h.strip() for h in header]
        col = {name: i for i, name in enumerate(header)}
        needed = {"pitch": schema.pitch, "yaw": schema.yaw, "roll": schema.roll}
        for role, name in needed.items():
            if name not in col:
                raise SchemaError(
                    f"{path}: missing {role} column {name!r}"
                )
        succ_idx = col.get(schema.success) if schema.success else None
        ts_idx = col.get(schema.timestamp) if schema.timestamp else None
        idx = [col[schema.pitch], col[schema.yaw], col[schema.roll]]

        values, valid, stamps = [], [], []
        for r, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                angles = [float(row[i]) for i in idx]
                ok = True
                if succ_idx is not None:
                    ok = float(row[succ_idx]) != 0.0
                if ts_idx is not None:
                    stamps.append(float(row[ts_idx]))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: row {r}: {exc}", row=r) from None
            if not all(math.isfinite(a) for a in angles):
                ok, angles = False, [0.0, 0.0, 0.0]
            values.append(angles)
            valid.append(ok)
    if not values:
        raise EmptyInputError(f"pose file has no data rows: {path}")

    arr = np.asarray(values, dtype=float)
    if schema.units == "degrees":
        arr = np.deg2rad(arr)
    mask = np.asarray(valid, dtype=bool)
    arr[~mask] = 0.0

    if fps is None:
        if len(stamps) < 2:
            raise SchemaError(f"{path}: fps not given and no timestamps to infer it")
        step = float(np.median(np.diff(stamps)))
        if step <= 0:
            raise ParseError(f"{path}: timestamps are not increasing")
        fps = 1.0 / step
    rec = recording_id if recording_id is not None else path.stem
    return HeadPoseSeries(
        subject_id=subject_id if subject_id is not None else rec,
        recording_id=rec,
        fps=fps,
        pitch=arr[:, 0],
        yaw=arr[:, 1],
        roll=arr[:, 2],
        valid_mask=mask,
    )


def write_headpose_csv(series: HeadPoseSeries, path, schema: PoseSchema = PoseSchema()):
    """Write a series in the pose-file layout (17 significant digits)."""
    scale = 180.0 / np.pi if schema.units == "degrees" else 1.0
    cols, rows = [], []
    if schema.frame:
        cols.append(schema.frame)
    if schema.timestamp:
        cols.append(schema.timestamp)
    cols += [schema.pitch, schema.yaw, schema.roll]
    if schema.success:
        cols.append(schema.success)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=schema.delimiter)
        w.writerow(cols)
        for i in range(len(series)):
            row = []
            if schema.frame:
                row.append(i)
            if schema.timestamp:
                row.append(f"{i / series.fps:.17g}")
            row += [
                f"{series.pitch[i] * scale:.17g}",
                f"{series.yaw[i] * scale:.17g}",
                f"{series.roll[i] * scale:.17g}",
            ]
            if schema.success:
                row.append(int(series.valid_mask[i]))
            w.writerow(row)


def _fill_short_gaps(values: np.ndarray, mask: np.ndarray, max_gap: int):
    values = values.copy()
    mask = mask.copy()
    n = len(mask)
    i = 0
    while i < n:
        if mask[i]:
            i += 1
            continue
        j = i
        while j < n and not mask[j]:
            j += 1
        # only internal gaps bounded by valid frames are bridged
        if i > 0 and j < n and (j - i) <= max_gap:
            t = np.arange(1, j - i + 1) / (j - i + 1)
            values[i:j] = values[i - 1] + t[:, None] * (values[j] - values[i - 1])
            mask[i:j] = True
        i = j
    return values, mask


def clean_and_resample(
    series: HeadPoseSeries,
    target_fps: float = CANONICAL_FPS,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
) -> HeadPoseSeries:
    """Bridge short tracking dropouts and resample to ``target_fps``.

    Gaps of at most ``max_gap_s`` seconds between valid frames are linearly
    interpolated. Longer gaps stay invalid. Resampling is linear; an output
    frame is valid only when both source frames it draws on are valid.
    """
    if not target_fps > 0:
        raise ConfigError(f"target_fps must be positive, got {target_fps}")
    if not np.any(series.valid_mask):
        raise UnusableSeriesError(
            f"recording {series.recording_id!r} has no valid frames"
        )
    values = series.angles()
    max_gap = int(math.floor(max_gap_s * series.fps + 1e-9))
    values, mask = _fill_short_gaps(values, series.valid_mask, max_gap)
    values[~mask] = 0.0

    if target_fps != series.fps:
        n_src = len(mask)
        n_out = int(math.floor((n_src - 1) * target_fps / series.fps + 1e-9)) + 1
        pos = np.arange(n_out) * (series.fps / target_fps)
        i0 = np.minimum(np.floor(pos + 1e-9).astype(int), n_src - 1)
        w = np.clip(pos - i0, 0.0, 1.0)
        w[w < 1e-9] = 0.0
        i1 = np.minimum(i0 + 1, n_src - 1)
        values = (1.0 - w)[:, None] * values[i0] + w[:, None] * values[i1]
        mask = mask[i0] & ((w == 0.0) | mask[i1])
        values[~mask] = 0.0

    return HeadPoseSeries(
        subject_id=series.subject_id,
        recording_id=series.recording_id,
        fps=target_fps,
        pitch=values[:, 0],
        yaw=values[:, 1],
        roll=values[:, 2],
        valid_mask=mask,
    )


def _check_score(score) -> int:
    if isinstance(score, bool) or int(score) != score:
        raise DomainError(f"BDI score must be an integer, got {score!r}")
    score = int(score)
    if not 0 <= score <= 63:
        raise DomainError(f"BDI score {score} outside [0, 63]")
    return score


def bdi_to_binary(score: int) -> str:
    """Dichotomize a BDI score: 13 or below is ``control``."""
    return "control" if _check_score(score) <= 13 else "depressed"


def bdi_to_band(score: int) -> str:
    s = _check_score(score)
    if s <= 13:
        return "minimal"
    if s <= 19:
        return "mild"
    if s <= 28:
        return "moderate"
    return "severe"


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    recording_path: str
    bdi_score: Optional[int] = None
    binary_label: Optional[str] = None
    split: Optional[str] = None

    def __post_init__(self):
        if self.bdi_score is None and self.binary_label is None:
            raise DataError(f"subject {self.subject_id!r}: neither bdi nor label given")
        if self.bdi_score is not None:
            object.__setattr__(self, "bdi_score", _check_score(self.bdi_score))
        if self.binary_label is not None and self.binary_label not in BINARY_LABELS + BANDS:
            raise DataError(f"subject {self.subject_id!r}: unknown label {self.binary_label!r}")
        if self.split is not None and self.split not in SPLITS:
            raise DataError(f"subject {self.subject_id!r}: unknown split {self.split!r}")

    @property
    def recording_id(self) -> str:
        return Path(self.recording_path).stem

    def label(self, task: str = "binary") -> str:
        """Class label for ``task`` (``"binary"`` or ``"bands"``).

        An explicit label wins over the BDI score for the binary task. A
        band-valued label is accepted and collapsed to binary on demand.
        """
        lab = self.binary_label
        if task == "binary":
            if lab in BINARY_LABELS:
                return lab
            if lab in BANDS:
                return "control" if lab == "minimal" else "depressed"
            return bdi_to_binary(self.bdi_score)
        if task == "bands":
            if self.bdi_score is not None:
                return bdi_to_band(self.bdi_score)
            if lab in BANDS:
                return lab
            raise DataError(f"subject {self.subject_id!r}: no BDI score for band task")
        raise ConfigError(f"unknown task {task!r}")


@dataclass(frozen=True)
class Manifest:
    records: tuple
    dataset_name: str = "dataset"
    root: str = field(default=".", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            key = (r.subject_id, r.recording_path)
            if key in seen:
                raise DataError(f"duplicate manifest entry {key}")
            seen.add(key)

    def resolve(self, record: SubjectRecord) -> Path:
        p = Path(record.recording_path)
        return p if p.is_absolute() else Path(self.root) / p


def load_manifest(path) -> Manifest:
    """Read a JSON manifest: ``{"dataset_name": ..., "records": [...]}``.

    Record keys are ``subject_id``, ``path``, ``bdi``, ``label``, ``split``;
    relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    raw = doc.get("records") if isinstance(doc, dict) else doc
    if not raw:
        raise EmptyInputError(f"manifest has no records: {path}")
    records = []
    for i, r in enumerate(raw):
        try:
            records.append(
                SubjectRecord(
                    subject_id=str(r["subject_id"]),
                    recording_path=str(r["path"]),
                    bdi_score=r.get("bdi"),
                    binary_label=r.get("label"),
                    split=r.get("split"),
                )
            )
        except KeyError as exc:
            raise SchemaError(f"{path}: record {i} lacks {exc}") from None
    name = doc.get("dataset_name", path.stem) if isinstance(doc, dict) else path.stem
    return Manifest(records=records, dataset_name=name, root=str(path.parent))


def save_manifest(manifest: Manifest, path):
    recs = []
    for r in manifest.records:
        d = {"subject_id": r.subject_id, "path": r.recording_path}
        if r.bdi_score is not None:
            d["bdi"] = r.bdi_score
        if r.binary_label is not None:
            d["label"] = r.binary_label
        if r.split is not None:
            d["split"] = r.split
        recs.append(d)
    doc = {"dataset_name": manifest.dataset_name, "records": recs}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_recordings(
    manifest: Manifest,
    schema: PoseSchema = PoseSchema(),
    fps: Optional[float] = None,
    target_fps: float = CANONICAL_FPS,
    max_gap_s: float = DEFAULT_MAX_GAP_S,
) -> list:
    """Load and clean every recording in the manifest, in manifest order."""
    out = []
    for rec in manifest.records:
        s = load_headpose_csv(
            manifest.resolve(rec), schema, fps=fps,
            subject_id=rec.subject_id, recording_id=rec.recording_id,
        )
        out.append(clean_and_resample(s, target_fps, max_gap_s))
    return out
