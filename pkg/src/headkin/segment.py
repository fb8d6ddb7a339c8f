"""Fixed-length kineme segments and thin-slice chunks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .ingest import HeadPoseSeries


@dataclass(frozen=True)
class SegmentationConfig:
    seg_len_s: float = 5.0
    overlap_frac: float = 0.5
    chunk_len_s: float = 60.0

    def __post_init__(self):
        if not self.seg_len_s > 0:
            raise ConfigError(f"seg_len_s must be positive, got {self.seg_len_s}")
        if not 0 <= self.overlap_frac < 1:
            raise ConfigError(f"overlap_frac must lie in [0, 1), got {self.overlap_frac}")
        if self.chunk_len_s < self.seg_len_s:
            raise ConfigError(
                f"chunk_len_s ({self.chunk_len_s}) shorter than seg_len_s ({self.seg_len_s})"
            )

    def seg_frames(self, fps: float) -> int:
        return int(round(self.seg_len_s * fps))

    def stride(self, fps: float) -> int:
        return max(1, int(round(self.seg_frames(fps) * (1.0 - self.overlap_frac))))


@dataclass(frozen=True, eq=False)
class Segment:
    recording_id: str
    start_frame: int
    values: np.ndarray  # (seg_len, 3): pitch, yaw, roll

    @property
    def length(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Chunk:
    recording_id: str
    chunk_index: int
    segments: tuple
    label: Optional[str] = None

    @property
    def n_segments(self) -> int:
        return len(self.segments)


def _window_starts(mask: np.ndarray, seg_len: int, stride: int, lo: int, hi: int):
    if hi - lo < seg_len:
        return []
    bad = np.concatenate([[0], np.cumsum(~mask)])
    starts = np.arange(lo, hi - seg_len + 1, stride)
    ok = (bad[starts + seg_len] - bad[starts]) == 0
    return starts[ok].tolist()


def _angles(series: HeadPoseSeries) -> np.ndarray:
    a = series.angles()
    a.setflags(write=False)
    return a


def _segments_in_span(series, angles, cfg, lo, hi):
    seg_len = cfg.seg_frames(series.fps)
    stride = cfg.stride(series.fps)
    return [
        Segment(series.recording_id, s, angles[s:s + seg_len])
        for s in _window_starts(series.valid_mask, seg_len, stride, lo, hi)
    ]


def make_segments(series: HeadPoseSeries, cfg: SegmentationConfig) -> list:
    """Overlapping windows of ``seg_len_s`` over the valid parts of a series.

    A window starts every ``round(seg_len * (1 - overlap_frac))`` frames and
    is dropped if it touches an invalid frame or runs past the end.
    """
    return _segments_in_span(series, _angles(series), cfg, 0, len(series))


def make_chunks(series: HeadPoseSeries, cfg: SegmentationConfig, label=None) -> list:
    """Split a series into consecutive non-overlapping chunks.

    The trailing remainder shorter than ``chunk_len_s`` is discarded, and
    segmentation restarts inside every chunk so no segment straddles a
    boundary. Chunks left without any valid segment are skipped but keep
    their positional ``chunk_index``.
    """
    angles = _angles(series)
    chunk_frames = int(round(cfg.chunk_len_s * series.fps))
    n_chunks = len(series) // chunk_frames
    chunks = []
    for c in range(n_chunks):
        lo = c * chunk_frames
        segs = _segments_in_span(series, angles, cfg, lo, lo + chunk_frames)
        if segs:
            chunks.append(Chunk(series.recording_id, c, tuple(segs), label))
    return chunks
