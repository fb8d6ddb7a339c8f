"""Evaluation protocols: repeated subject-disjoint k-fold CV and fixed
train/dev/test splits, scored at chunk and video level, plus the
chunk-length and angle-dimension ablations.

Every run fits its own kineme model on the training side only and tunes
the classifier without touching test subjects.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .errors import ConfigError, DegenerateLabelsError, EmptyInputError
from .features import (
    dims_columns,
    frequency_vector,
    hckd_vector,
    histogram_from_counts,
    residual_matrix,
    select_discriminative,
)
from .ingest import HeadPoseSeries, Manifest, PoseSchema, load_manifest, load_recordings
from .kineme import assign_ids, fit_kineme_model
from .learners import ClassifierSpec, default_grid, lattice, predict, search_splits, train
from .metrics import metrics
from .segment import make_chunks, make_segments

METRIC_NAMES = ("acc", "f1", "pr", "re")
TABLE_COLUMNS = ("condition", "classifier", "level", "chunk_len_s") + METRIC_NAMES

_SEVERITY = {"control": 0, "depressed": 1, "minimal": 0, "mild": 1, "moderate": 2, "severe": 3}


@dataclass(frozen=True, eq=False)
class Recording:
    subject_id: str
    recording_id: str
    label: str
    split: Optional[str]
    series: HeadPoseSeries


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    recordings: tuple
    task: str = "binary"

    @property
    def control_label(self) -> str:
        return "control" if self.task == "binary" else "minimal"

    def subjects(self) -> list:
        """(subject_id, label) pairs in first-appearance order."""
        seen = {}
        for r in self.recordings:
            seen.setdefault(r.subject_id, r.label)
        return list(seen.items())


def build_dataset(manifest: Manifest, series: Sequence[HeadPoseSeries], task: str = "binary") -> Dataset:
    recs = tuple(
        Recording(m.subject_id, s.recording_id, m.label(task), m.split, s)
        for m, s in zip(manifest.records, series)
    )
    return Dataset(manifest.dataset_name, recs, task)


def load_dataset(cfg: RunConfig) -> Dataset:
    d = cfg.dataset
    if not d.manifest:
        raise ConfigError("dataset.manifest is not set")
    manifest = load_manifest(d.manifest)
    series = load_recordings(manifest, PoseSchema.from_dict(d.schema), d.source_fps,
                             d.target_fps, d.max_gap_s)
    return build_dataset(manifest, series, d.task)


def derive_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# ---------------------------------------------------------------- folds

@dataclass(frozen=True)
class FoldPlan:
    k: int
    repetitions: int
    assignments: tuple  # one {subject_id: fold} mapping per repetition
    seed: int

    def runs(self):
        """(repetition, fold, train_subjects, test_subjects) in canonical order."""
        for rep, assign in enumerate(self.assignments):
            for f in range(self.k):
                test = sorted(s for s, a in assign.items() if a == f)
                train_ = sorted(s for s, a in assign.items() if a != f)
                yield rep, f, train_, test


def make_folds(subjects, k: int, reps: int = 1, seed: int = 0) -> FoldPlan:
    """Stratified, subject-disjoint fold assignment.

    Subjects of each class (classes in sorted order, subjects shuffled) are
    dealt round-robin with a pointer that carries over between classes, so
    fold sizes differ by at most one.
    """
    subjects = list(dict(subjects).items())
    if k > len(subjects):
        raise ConfigError(f"k={k} exceeds the number of subjects ({len(subjects)})")
    if k < 2:
        raise ConfigError("k must be at least 2")
    by_class = {}
    for sid, lab in sorted(subjects):
        by_class.setdefault(lab, []).append(sid)
    if len(by_class) < 2:
        raise DegenerateLabelsError("fold planning needs at least two classes")
    assignments = []
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), rep]))
        assign, ptr = {}, 0
        for lab in sorted(by_class):
            members = by_class[lab]
            for i in rng.permutation(len(members)):
                assign[members[i]] = ptr % k
                ptr += 1
        assignments.append(assign)
    return FoldPlan(k, reps, tuple(assignments), int(seed))


# ---------------------------------------------------------------- aggregation

def severity_rank(label) -> float:
    if isinstance(label, (int, np.integer)):
        return float(label)
    return float(_SEVERITY.get(str(label), -1))


def video_majority(chunk_predictions) -> object:
    """Modal chunk label; ties go to the more severe label."""
    preds = list(chunk_predictions)
    if not preds:
        raise EmptyInputError("no chunk predictions to aggregate")
    counts = Counter(preds)
    top = max(counts.values())
    tied = [lab for lab, c in counts.items() if c == top]
    return max(tied, key=lambda lab: (severity_rank(lab), str(lab)))


@dataclass
class EvalReport:
    level: str
    runs: list
    config: dict = field(default_factory=dict)
    details: list = field(default_factory=list)

    @property
    def aggregate(self) -> dict:
        arr = np.asarray(self.runs, dtype=float).reshape(-1, 4)
        return {name: (float(arr[:, i].mean()), float(arr[:, i].std()))
                for i, name in enumerate(METRIC_NAMES)}

    def mean(self, metric: str = "f1") -> float:
        return self.aggregate[metric][0]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "runs": [dict(zip(METRIC_NAMES, map(float, r))) for r in self.runs],
            "aggregate": {k: {"mean": m, "std": s} for k, (m, s) in self.aggregate.items()},
            "details": self.details,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d) -> "EvalReport":
        runs = [tuple(r[m] for m in METRIC_NAMES) for r in d["runs"]]
        return cls(d["level"], runs, d.get("config", {}), d.get("details", []))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


# ---------------------------------------------------------------- per-run work

@lru_cache(maxsize=4096)
def _segments(rec: Recording, seg) -> tuple:
    return tuple(make_segments(rec.series, seg))


@lru_cache(maxsize=4096)
def _chunks(rec: Recording, seg) -> tuple:
    return tuple(make_chunks(rec.series, seg, rec.label))


def fit_run_model(dataset: Dataset, cfg: RunConfig, train_recs, seed: int, chunk_len_s=None):
    """Kineme model (and discriminative set for 2CKD) from training recordings.

    HCKD uses only control-class recordings; 2CKD uses all of them.
    """
    seg = cfg.seg_config(chunk_len_s)
    if cfg.mode == "HCKD":
        fit_recs = [r for r in train_recs if r.label == dataset.control_label]
    else:
        fit_recs = list(train_recs)
    segs = [s for r in fit_recs for s in _segments(r, seg)]
    kc = cfg.kineme
    fps = fit_recs[0].series.fps if fit_recs else cfg.dataset.target_fps
    model = fit_kineme_model(segs, K=kc.K, subspace_dim=kc.subspace_dim, seed=seed,
                             n_restarts=kc.n_restarts, center_segments=kc.center_segments, fps=fps)
    dset = None
    if cfg.mode == "2CKD":
        counts = {True: np.zeros(kc.K, dtype=np.int64), False: np.zeros(kc.K, dtype=np.int64)}
        for r in train_recs:
            ids = assign_ids(model, _segments(r, seg))
            counts[r.label == dataset.control_label] += np.bincount(ids, minlength=kc.K)
        dset = select_discriminative(histogram_from_counts(counts[True]),
                                     histogram_from_counts(counts[False]))
    return model, dset


def recording_features(rec: Recording, model, dset, mode: str, seg) -> tuple:
    """(chunk indices, feature matrix) for one recording."""
    chunks = _chunks(rec, seg)
    if not chunks:
        return [], np.empty((0, 10 if mode == "2CKD" else 24))
    segs = [s for c in chunks for s in c.segments]
    bounds = np.cumsum([0] + [c.n_segments for c in chunks])
    if mode == "HCKD":
        A = np.abs(residual_matrix(model, segs))
        X = np.stack([hckd_vector(A[a:b]) for a, b in zip(bounds[:-1], bounds[1:])])
    else:
        ids = assign_ids(model, segs)
        X = np.stack([frequency_vector(ids[a:b], dset) for a, b in zip(bounds[:-1], bounds[1:])])
    return [c.chunk_index for c in chunks], X


@dataclass
class _Prepared:
    recs: dict  # recording_id -> (Recording, X)


def _prepare(dataset, cfg, subjects, train_subjects, seed, chunk_len_s):
    train_recs = [r for r in dataset.recordings if r.subject_id in train_subjects]
    model, dset = fit_run_model(dataset, cfg, train_recs, derive_seed(seed, 1), chunk_len_s)
    seg = cfg.seg_config(chunk_len_s)
    out = {}
    for r in dataset.recordings:
        if r.subject_id in subjects:
            _, X = recording_features(r, model, dset, cfg.mode, seg)
            out[r.recording_id] = (r, X)
    return _Prepared(out)


def _stack(prep, subjects, columns):
    Xs, ys, groups = [], [], []
    for rid in sorted(prep.recs):
        r, X = prep.recs[rid]
        if r.subject_id in subjects and len(X):
            Xs.append(X if columns is None else X[:, columns])
            ys += [r.label] * len(X)
            groups += [r.subject_id] * len(X)
    if not Xs:
        raise EmptyInputError("no chunks available for the requested subjects")
    return np.vstack(Xs), np.asarray(ys), np.asarray(groups)


def _tune(cfg, family, grid, prep, train_subjects, tune_subjects, columns, seed):
    points = lattice(grid)
    if len(points) == 1:
        return ClassifierSpec(family, points[0], derive_seed(seed, 2))
    if tune_subjects is not None:
        tr = _stack(prep, train_subjects, columns)
        va = _stack(prep, tune_subjects, columns)
        splits = [((tr[0], tr[1]), (va[0], va[1]))]
    else:
        labels = {r.subject_id: r.label for r, _ in prep.recs.values()}
        subs = [(s, labels[s]) for s in sorted(train_subjects)]
        inner_k = min(cfg.protocol.inner_k, len(subs))
        plan = make_folds(subs, inner_k, 1, derive_seed(seed, 3))
        splits = []
        for _, _, itr, iva in plan.runs():
            tr = _stack(prep, set(itr), columns)
            va = _stack(prep, set(iva), columns)
            if len(set(tr[1])) >= 2:
                splits.append(((tr[0], tr[1]), (va[0], va[1])))
    spec, _ = search_splits(family, grid, splits, derive_seed(seed, 2))
    return spec


def _score(cfg, family, grid, prep, train_subjects, test_subjects, tune_subjects, columns, seed):
    spec = _tune(cfg, family, grid, prep, train_subjects, tune_subjects, columns, seed)
    Xtr, ytr, _ = _stack(prep, train_subjects, columns)
    model = train(spec, Xtr, ytr)
    chunk_true, chunk_pred, vid_true, vid_pred = [], [], [], []
    for rid in sorted(prep.recs):
        r, X = prep.recs[rid]
        if r.subject_id not in test_subjects or not len(X):
            continue
        pred = predict(model, X if columns is None else X[:, columns])
        chunk_true += [r.label] * len(pred)
        chunk_pred += pred.tolist()
        vid_true.append(r.label)
        vid_pred.append(video_majority(pred.tolist()))
    return (metrics(chunk_true, chunk_pred), metrics(vid_true, vid_pred),
            {"hyperparameters": spec.hyperparameters, "n_test_chunks": len(chunk_true),
             "n_test_videos": len(vid_true)})


# ---------------------------------------------------------------- run plans

def _run_plan(dataset: Dataset, cfg: RunConfig) -> list:
    """Run descriptors: (rep, fold, train, test, tune-or-None, seed)."""
    if cfg.protocol.name == "repeated-cv":
        plan = make_folds(dataset.subjects(), cfg.protocol.k, cfg.protocol.repetitions, cfg.seed)
        return [(rep, f, tuple(tr), tuple(te), None, derive_seed(cfg.seed, rep, f))
                for rep, f, tr, te in plan.runs()]
    split_of = {}
    for r in dataset.recordings:
        if r.split is None:
            raise ConfigError(f"fixed-splits protocol: recording {r.recording_id} has no split")
        split_of.setdefault(r.subject_id, r.split)
    parts = {s: tuple(sorted(k for k, v in split_of.items() if v == s)) for s in ("train", "dev", "test")}
    if not parts["train"] or not parts["test"]:
        raise ConfigError("fixed-splits protocol needs nonempty train and test splits")
    tune = parts["dev"] if parts["dev"] else None
    return [(0, 0, parts["train"], parts["test"], tune, derive_seed(cfg.seed, 0, 0))]


def _run_task(dataset, task):
    cfg, chunk_len_s, conditions, (rep, fold, tr, te, tune, seed) = task
    train_s, test_s = set(tr), set(te)
    tune_s = set(tune) if tune is not None else None
    involved = train_s | test_s | (tune_s or set())
    prep = _prepare(dataset, cfg, involved, train_s, seed, chunk_len_s)
    grid = cfg.classifier.grid or default_grid(cfg.classifier.family)
    results = []
    for columns in conditions:
        c, v, info = _score(cfg, cfg.classifier.family, grid, prep, train_s, test_s, tune_s, columns, seed)
        info.update({"repetition": rep, "fold": fold})
        results.append((c, v, info))
    return results


_WORKER_DATASET = None


def _init_worker(dataset):
    global _WORKER_DATASET
    _WORKER_DATASET = dataset


def _call(task):
    return _run_task(_WORKER_DATASET, task)


def _map_runs(dataset, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(dataset, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(dataset,)) as ex:
        return list(ex.map(_call, tasks))


def _effective(cfg: RunConfig, mode=None, family=None, chunk_len_s=None, protocol=None, grid=None):
    over = {}
    if mode is not None:
        over["mode"] = mode
    if family is not None:
        over["classifier.family"] = family
        if family != cfg.classifier.family and grid is None:
            over["classifier.grid"] = None
    if grid is not None:
        over["classifier.grid"] = grid
    if chunk_len_s is not None:
        over["segmentation.chunk_len_s"] = chunk_len_s
    if protocol is not None:
        over["protocol.name"] = protocol
    return cfg.with_overrides(**over) if over else cfg


def _collect(cfg, per_run, index):
    chunk = EvalReport("chunk", [], cfg.to_dict())
    video = EvalReport("video", [], cfg.to_dict())
    for results in per_run:
        c, v, info = results[index]
        chunk.runs.append(tuple(c))
        video.runs.append(tuple(v))
        chunk.details.append(info)
        video.details.append(info)
    return chunk, video


def run_protocol(dataset: Dataset, cfg: RunConfig, *, mode=None, family=None, chunk_len_s=None,
                 protocol=None, grid=None, workers=None) -> tuple:
    """Evaluate one (mode, classifier, chunk length, protocol) setting.

    Returns ``(chunk_report, video_report)``; each report holds one metric
    tuple per run (a run is one fold of one repetition, or the single
    fixed split).
    """
    cfg = _effective(cfg, mode, family, chunk_len_s, protocol, grid)
    tasks = [(cfg, None, [None], run) for run in _run_plan(dataset, cfg)]
    per_run = _map_runs(dataset, tasks, workers or cfg.workers)
    return _collect(cfg, per_run, 0)


def ablate_chunk_length(dataset: Dataset, cfg: RunConfig, lengths=None, *, mode=None,
                        family=None, workers=None) -> list:
    """Table rows (chunk and video level) for every chunk length."""
    cfg = _effective(cfg, mode, family)
    lengths = list(lengths if lengths is not None else cfg.ablate.lengths)
    rows = []
    for L in lengths:
        chunk, video = run_protocol(dataset, cfg, chunk_len_s=L, workers=workers)
        for rep in (chunk, video):
            rows.append(_row(cfg.mode, cfg.classifier.family, rep, L))
    return rows


def ablate_dims(dataset: Dataset, cfg: RunConfig, dims=None, *, family=None, workers=None) -> tuple:
    """Chunk-level rows for HCKD features restricted to angle blocks.

    Returns ``(rows, reports)`` where ``reports`` maps each condition name
    to its chunk-level report. The full 24-column features are computed
    once per run and sliced per condition.
    """
    cfg = _effective(cfg, "HCKD", family)
    dims = [tuple(d) for d in (dims if dims is not None else cfg.ablate.dims)]
    if not dims or any(len(d) == 0 for d in dims):
        raise ConfigError("empty dimension set in ablation")
    columns = [dims_columns(d) for d in dims]
    tasks = [(cfg, None, columns, run) for run in _run_plan(dataset, cfg)]
    per_run = _map_runs(dataset, tasks, workers or cfg.workers)
    rows, reports = [], {}
    for i, d in enumerate(dims):
        name = "+".join(d)
        chunk, _ = _collect(cfg, per_run, i)
        chunk.config = dict(chunk.config, dims=list(d))
        reports[name] = chunk
        rows.append(_row(name, cfg.classifier.family, chunk, cfg.segmentation.chunk_len_s))
    return rows, reports


def _row(condition, classifier, report, chunk_len_s) -> dict:
    agg = report.aggregate
    row = {"condition": condition, "classifier": classifier, "level": report.level,
           "chunk_len_s": float(chunk_len_s)}
    row.update({m: agg[m][0] for m in METRIC_NAMES})
    return row


def report_rows(condition, classifier, reports, chunk_len_s) -> list:
    return [_row(condition, classifier, r, chunk_len_s) for r in reports]


def write_table(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v)
                        for k, v in r.items() if k in TABLE_COLUMNS})
