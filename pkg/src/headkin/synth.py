"""Class-conditional synthetic head motion.

Controls nod and shake (sinusoidal pitch and yaw) on top of AR(1) jitter.
Patients hold a near-static pose: low-variance AR(1) jitter plus a slow
mean-reverting drift of the resting pose. In band mode the oscillation
amplitude is scaled down and the drift scaled up with severity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, DataError
from .ingest import (
    BANDS,
    HeadPoseSeries,
    Manifest,
    SubjectRecord,
    save_manifest,
    write_headpose_csv,
)

CLASSES = ("control", "patient")
_BAND_BDI = {"minimal": (0, 13), "mild": (14, 19), "moderate": (20, 28), "severe": (29, 63)}


@dataclass(frozen=True)
class ControlParams:
    nod_amplitude: float = 0.2
    nod_freq: float = 0.4
    shake_amplitude: float = 0.15
    shake_freq: float = 0.2
    ar_noise_sigma: float = 0.02
    ar_coeff: float = 0.9


@dataclass(frozen=True)
class PatientParams:
    drift_sigma: float = 0.03
    ar_noise_sigma: float = 0.01
    ar_coeff: float = 0.9
    drift_tau_s: float = 5.0


@dataclass(frozen=True)
class SynthConfig:
    n_subjects_per_class: int = 20
    duration_s: float = 300.0
    fps: float = 30.0
    control_params: ControlParams = field(default_factory=ControlParams)
    patient_params: PatientParams = field(default_factory=PatientParams)
    severity_levels: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        c, p = self.control_params, self.patient_params
        if self.n_subjects_per_class < 1:
            raise ConfigError("n_subjects_per_class must be >= 1")
        if not (self.duration_s > 0 and self.fps > 0):
            raise ConfigError("duration_s and fps must be positive")
        if min(c.nod_amplitude, c.shake_amplitude, c.ar_noise_sigma,
               p.drift_sigma, p.ar_noise_sigma) < 0:
            raise ConfigError("amplitudes and noise levels must be nonnegative")
        if not (c.nod_freq > 0 and c.shake_freq > 0 and p.drift_tau_s > 0):
            raise ConfigError("frequencies and drift time constant must be positive")
        if not (0 <= c.ar_coeff < 1 and 0 <= p.ar_coeff < 1):
            raise ConfigError("AR coefficients must lie in [0, 1)")
        if self.severity_levels is not None:
            lv = tuple(float(v) for v in self.severity_levels)
            if len(lv) != 4 or any(a < b for a, b in zip(lv, lv[1:])) or min(lv) < 0 or max(lv) > 1:
                raise ConfigError("severity_levels must be 4 non-increasing values in [0, 1]")
            object.__setattr__(self, "severity_levels", lv)

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "SynthConfig":
        d = dict(d or {})
        try:
            if "control_params" in d:
                d["control_params"] = ControlParams(**d["control_params"])
            if "patient_params" in d:
                d["patient_params"] = PatientParams(**d["patient_params"])
            if d.get("severity_levels") is not None:
                d["severity_levels"] = tuple(d["severity_levels"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid synth config: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.severity_levels is not None:
            d["severity_levels"] = list(self.severity_levels)
        return d

    @property
    def classes(self) -> tuple:
        return BANDS if self.severity_levels is not None else CLASSES


DEFAULT_SEVERITY = (1.0, 0.6, 0.3, 0.0)


def ar1(n: int, sigma: float, coeff: float, rng: np.random.Generator) -> np.ndarray:
    """AR(1) path with stationary standard deviation ``sigma``."""
    if sigma == 0:
        return np.zeros(n)
    innov = rng.standard_normal(n) * sigma * np.sqrt(1.0 - coeff * coeff)
    innov[0] = rng.standard_normal() * sigma
    return lfilter([1.0], [1.0, -coeff], innov)


def _class_code(cls: str) -> int:
    return (CLASSES + BANDS).index(cls)


def gen_subject(cfg: SynthConfig, cls: str, subject_index: int) -> HeadPoseSeries:
    """One synthetic recording; deterministic in (seed, class, index)."""
    if cls not in cfg.classes:
        raise ConfigError(f"class {cls!r} not available; expected one of {cfg.classes}")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _class_code(cls), subject_index]))
    c, p = cfg.control_params, cfg.patient_params
    n = int(round(cfg.duration_s * cfg.fps))
    t = np.arange(n) / cfg.fps

    if cls == "control":
        level = 1.0
    elif cls == "patient":
        level = 0.0
    else:
        level = cfg.severity_levels[BANDS.index(cls)]

    jitter = rng.uniform(0.8, 1.2, size=2)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
    nod = level * c.nod_amplitude * jitter[0] * np.sin(2 * np.pi * c.nod_freq * t + phase[0])
    shake = level * c.shake_amplitude * jitter[1] * np.sin(2 * np.pi * c.shake_freq * t + phase[1])
    noise_sigma = level * c.ar_noise_sigma + (1 - level) * p.ar_noise_sigma
    noise_coeff = level * c.ar_coeff + (1 - level) * p.ar_coeff
    drift_sigma = (1 - level) * p.drift_sigma
    drift_coeff = float(np.exp(-1.0 / (p.drift_tau_s * cfg.fps)))

    angles = []
    for osc in (nod, shake, np.zeros(n)):
        a = osc + ar1(n, noise_sigma, noise_coeff, rng) + ar1(n, drift_sigma, drift_coeff, rng)
        angles.append(a)
    angles = np.clip(np.array(angles), -3.0, 3.0)
    sid = f"{cls}_{subject_index:03d}"
    return HeadPoseSeries(
        subject_id=sid, recording_id=sid, fps=cfg.fps,
        pitch=angles[0], yaw=angles[1], roll=angles[2],
        valid_mask=np.ones(n, dtype=bool),
    )


def gen_benchmark(cfg: SynthConfig, out_dir) -> tuple:
    """Write pose files and ``manifest.json`` under ``out_dir``.

    Returns ``(manifest, series)``. Splits are dealt round-robin within each
    class so every split is class-balanced. Band benchmarks also carry a BDI
    score drawn inside the band.
    """
    out_dir = Path(out_dir)
    try:
        (out_dir / "poses").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out_dir}: {exc}") from None
    splits = ("train", "dev", "test")
    records, series = [], []
    for cls in cfg.classes:
        for i in range(cfg.n_subjects_per_class):
            s = gen_subject(cfg, cls, i)
            rel = f"poses/{s.recording_id}.csv"
            try:
                write_headpose_csv(s, out_dir / rel)
            except OSError as exc:
                raise DataError(f"cannot write {out_dir / rel}: {exc}") from None
            if cls in BANDS:
                lo, hi = _BAND_BDI[cls]
                rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 99, _class_code(cls), i]))
                rec = SubjectRecord(s.subject_id, rel, bdi_score=int(rng.integers(lo, hi + 1)),
                                    binary_label=cls, split=splits[i % 3])
            else:
                label = "control" if cls == "control" else "depressed"
                rec = SubjectRecord(s.subject_id, rel, binary_label=label, split=splits[i % 3])
            records.append(rec)
            series.append(s)
    name = "synthetic-bands" if cfg.severity_levels is not None else "synthetic"
    manifest = Manifest(records=records, dataset_name=name, root=str(out_dir))
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest, series
