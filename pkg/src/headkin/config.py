"""Run configuration shared by the library entry points and the CLI.

A run is described by one JSON document with sections ``dataset``,
``segmentation``, ``kineme``, ``classifier``, ``protocol``, ``synth`` and
``ablate`` plus top-level ``mode``, ``seed``, ``workers`` and ``out``.
Omitted keys take the defaults below.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .features import MODES
from .ingest import CANONICAL_FPS, DEFAULT_MAX_GAP_S, PoseSchema
from .learners import FAMILIES
from .segment import SegmentationConfig

PROTOCOLS = ("repeated-cv", "fixed-splits")
TASKS = ("binary", "bands")


@dataclass(frozen=True)
class DatasetSection:
    manifest: Optional[str] = None
    schema: dict = field(default_factory=dict)
    source_fps: Optional[float] = None
    target_fps: float = CANONICAL_FPS
    max_gap_s: float = DEFAULT_MAX_GAP_S
    task: str = "binary"


@dataclass(frozen=True)
class SegmentationSection:
    seg_len_s: float = 5.0
    overlap_frac: float = 0.5
    chunk_len_s: float = 60.0


@dataclass(frozen=True)
class KinemeSection:
    K: int = 16
    subspace_dim: float = 0.95
    n_restarts: int = 5
    center_segments: bool = False
    model: Optional[str] = None


@dataclass(frozen=True)
class ClassifierSection:
    family: str = "SVC"
    grid: Optional[dict] = None


@dataclass(frozen=True)
class ProtocolSection:
    name: str = "repeated-cv"
    k: int = 10
    repetitions: int = 5
    inner_k: int = 5


@dataclass(frozen=True)
class AblateSection:
    lengths: tuple = (15, 45, 75, 105, 135)
    dims: tuple = (("pitch",), ("yaw",), ("roll",),
                   ("pitch", "yaw"), ("pitch", "roll"), ("yaw", "roll"))


_SECTIONS = {
    "dataset": DatasetSection,
    "segmentation": SegmentationSection,
    "kineme": KinemeSection,
    "classifier": ClassifierSection,
    "protocol": ProtocolSection,
    "ablate": AblateSection,
}


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    segmentation: SegmentationSection = field(default_factory=SegmentationSection)
    kineme: KinemeSection = field(default_factory=KinemeSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    ablate: AblateSection = field(default_factory=AblateSection)
    synth: dict = field(default_factory=dict)
    mode: str = "HCKD"
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.classifier.family not in FAMILIES:
            raise ConfigError(f"unknown classifier family {self.classifier.family!r}")
        if self.protocol.name not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol.name!r}")
        if self.dataset.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.dataset.task!r}")
        if self.protocol.k < 2 or self.protocol.repetitions < 1 or self.protocol.inner_k < 2:
            raise ConfigError("protocol needs k >= 2, inner_k >= 2, repetitions >= 1")
        if self.kineme.K < 2 or self.kineme.n_restarts < 1:
            raise ConfigError("kineme K must be >= 2 and n_restarts >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.seg_config()
        PoseSchema.from_dict(self.dataset.schema)

    def seg_config(self, chunk_len_s: Optional[float] = None) -> SegmentationConfig:
        s = self.segmentation
        return SegmentationConfig(
            s.seg_len_s, s.overlap_frac, s.chunk_len_s if chunk_len_s is None else chunk_len_s
        )

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with dotted-key overrides, e.g. ``{"protocol.k": 5}``."""
        d = self.to_dict()
        for key, value in kw.items():
            parts = key.split(".")
            node = d
            for p in parts[:-1]:
                node = node[p]
            node[parts[-1]] = value
        return RunConfig.from_dict(d)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "RunConfig":
        d = copy.deepcopy(d or {})
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        top = {f.name for f in fields(cls)}
        unknown = set(d) - top
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kw = {}
        for name, value in d.items():
            if name in _SECTIONS:
                sec = _SECTIONS[name]
                if not isinstance(value, dict):
                    raise ConfigError(f"section {name!r} must be a mapping")
                bad = set(value) - {f.name for f in fields(sec)}
                if bad:
                    raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
                if name == "ablate":
                    value = {k: tuple(tuple(x) if isinstance(x, list) else x for x in v)
                             for k, v in value.items()}
                kw[name] = sec(**value)
            else:
                kw[name] = value
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig.from_dict(d)
