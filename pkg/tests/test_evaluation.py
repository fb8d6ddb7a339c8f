import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from headkin.config import RunConfig
from headkin.errors import ConfigError, EmptyInputError
from headkin.evaluation import (
    EvalReport,
    ablate_chunk_length,
    ablate_dims,
    build_dataset,
    fit_run_model,
    make_folds,
    recording_features,
    run_protocol,
    video_majority,
    write_table,
)
from headkin.features import dims_columns
from headkin.synth import DEFAULT_SEVERITY, SynthConfig, gen_benchmark

SMALL = {
    "kineme": {"K": 12, "n_restarts": 2},
    "segmentation": {"chunk_len_s": 30},
    "protocol": {"k": 3, "repetitions": 1, "inner_k": 2},
    "classifier": {"family": "LR", "grid": {"penalty": ["l2"], "lam": [0.01, 1.0]}},
}


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    cfg = SynthConfig(n_subjects_per_class=6, duration_s=120, seed=3)
    manifest, series = gen_benchmark(cfg, tmp_path_factory.mktemp("bench"))
    return build_dataset(manifest, series)


@pytest.fixture(scope="module")
def small_cfg():
    return RunConfig.from_dict(SMALL)


# ------------------------------------------------------------------ folds

def subjects(n_per):
    return [(f"c{i}", "control") for i in range(n_per)] + [(f"d{i}", "depressed") for i in range(n_per)]


def test_ten_fold_five_repetition_layout():
    plan = make_folds(subjects(30), 10, 5, seed=1)
    runs = list(plan.runs())
    assert len(runs) == 50
    for rep, f, tr, te in runs[:10]:
        assert len(te) == 6
        assert sum(s.startswith("c") for s in te) == 3
        assert not set(tr) & set(te)
        assert len(tr) + len(te) == 60


def test_folds_deterministic():
    a, b = make_folds(subjects(12), 4, 2, 5), make_folds(subjects(12), 4, 2, 5)
    assert a.assignments == b.assignments
    assert a.assignments[0] != a.assignments[1]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(2, 6), st.integers(0, 99))
def test_fold_invariants(nc, nd, k, seed):
    subs = [(f"c{i}", "control") for i in range(nc)] + [(f"d{i}", "depressed") for i in range(nd)]
    if k > nc + nd:
        with pytest.raises(ConfigError):
            make_folds(subs, k, 1, seed)
        return
    plan = make_folds(subs, k, 1, seed)
    sizes = np.bincount(list(plan.assignments[0].values()), minlength=k)
    assert sizes.max() - sizes.min() <= 1
    assert set(plan.assignments[0]) == {s for s, _ in subs}
    for lab in ("control", "depressed"):
        per = np.bincount([f for s, f in plan.assignments[0].items() if s[0] == lab[0]], minlength=k)
        assert per.max() - per.min() <= 1


def test_too_many_folds():
    with pytest.raises(ConfigError):
        make_folds(subjects(2), 5)


# ------------------------------------------------------------------ video majority

@pytest.mark.parametrize("preds,expected", [
    ((1, 1, 0), 1),
    ((1, 0), 1),
    (("control", "depressed"), "depressed"),
    (("minimal", "mild", "mild", "severe"), "mild"),
    (("minimal", "severe"), "severe"),
    (("mild", "moderate", "moderate", "mild"), "moderate"),
])
def test_video_majority(preds, expected):
    assert video_majority(preds) == expected


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["minimal", "mild", "moderate", "severe"]), min_size=1, max_size=12),
       st.randoms())
def test_video_majority_order_invariant(preds, r):
    shuffled = list(preds)
    r.shuffle(shuffled)
    assert video_majority(preds) == video_majority(shuffled)


def test_video_majority_empty():
    with pytest.raises(EmptyInputError):
        video_majority([])


# ------------------------------------------------------------------ reports

def test_report_aggregate_recomputable():
    rep = EvalReport("chunk", [(0.5, 0.4, 0.3, 0.2), (1.0, 0.8, 0.7, 0.6)])
    agg = rep.aggregate
    assert agg["acc"] == (pytest.approx(0.75, abs=1e-12), pytest.approx(0.25, abs=1e-12))
    back = EvalReport.from_dict(rep.to_dict())
    assert back.runs == rep.runs


# ------------------------------------------------------------------ protocol runs

def test_hckd_fits_on_controls_only(small_dataset, small_cfg):
    recs = list(small_dataset.recordings)
    model, dset = fit_run_model(small_dataset, small_cfg, recs, seed=0)
    assert dset is None
    n_ctrl_segs = model.config["n_segments"]
    cfg2 = small_cfg.with_overrides(mode="2CKD")
    model2, dset2 = fit_run_model(small_dataset, cfg2, recs, seed=0)
    assert model2.config["n_segments"] == 2 * n_ctrl_segs
    assert len(set(dset2.ids)) == 10


def test_protocol_reports(small_dataset, small_cfg):
    chunk, video = run_protocol(small_dataset, small_cfg)
    assert chunk.level == "chunk" and video.level == "video"
    assert len(chunk.runs) == len(video.runs) == 3
    for rep in (chunk, video):
        arr = np.asarray(rep.runs)
        assert ((arr >= 0) & (arr <= 1)).all()
        for i, m in enumerate(("acc", "f1", "pr", "re")):
            assert rep.aggregate[m][0] == pytest.approx(arr[:, i].mean(), abs=1e-12)
            assert rep.aggregate[m][1] == pytest.approx(arr[:, i].std(), abs=1e-12)
    assert chunk.config["seed"] == small_cfg.seed
    assert sum(d["n_test_videos"] for d in video.details) == len(small_dataset.recordings)
    # 120 s recordings with 30 s chunks -> 4 chunks each
    assert sum(d["n_test_chunks"] for d in chunk.details) == 4 * len(small_dataset.recordings)


def test_modes_share_folds(small_dataset, small_cfg):
    h = run_protocol(small_dataset, small_cfg, mode="HCKD")
    c = run_protocol(small_dataset, small_cfg, mode="2CKD")
    assert len(h[0].runs) == len(c[0].runs)
    ch, cc = dict(h[0].config), dict(c[0].config)
    assert (ch.pop("mode"), cc.pop("mode")) == ("HCKD", "2CKD")
    assert ch == cc
    assert [(d["repetition"], d["fold"]) for d in h[0].details] == \
           [(d["repetition"], d["fold"]) for d in c[0].details]


def test_fixed_splits(small_dataset, small_cfg):
    cfg = small_cfg.with_overrides(**{"kineme.K": 8})  # train split: 2 controls
    chunk, video = run_protocol(small_dataset, cfg, protocol="fixed-splits")
    assert len(chunk.runs) == 1
    # splits are dealt round-robin: 2 test subjects per class
    assert chunk.details[0]["n_test_videos"] == 4


def test_worker_count_does_not_change_results(small_dataset, small_cfg):
    a = run_protocol(small_dataset, small_cfg, workers=1)
    b = run_protocol(small_dataset, small_cfg, workers=2)
    for x, y in zip(a, b):
        assert x.to_dict() == y.to_dict()


def test_ablate_chunk_length(small_dataset, small_cfg, tmp_path):
    rows = ablate_chunk_length(small_dataset, small_cfg, lengths=[15, 60])
    assert [(r["chunk_len_s"], r["level"]) for r in rows] == \
           [(15.0, "chunk"), (15.0, "video"), (60.0, "chunk"), (60.0, "video")]
    assert all(0 <= r[m] <= 1 for r in rows for m in ("acc", "f1", "pr", "re"))
    write_table(rows, tmp_path / "a.csv")
    again = ablate_chunk_length(small_dataset, small_cfg, lengths=[15, 60])
    write_table(again, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == \
        "condition,classifier,level,chunk_len_s,acc,f1,pr,re"


def test_ablate_dims_matches_full_feature_slices(small_dataset, small_cfg):
    dims = [("pitch",), ("pitch", "yaw")]
    rows, reports = ablate_dims(small_dataset, small_cfg, dims=dims)
    assert [r["condition"] for r in rows] == ["pitch", "pitch+yaw"]
    assert len(dims_columns(dims[0])) == 8 and len(dims_columns(dims[1])) == 16
    # a single-condition run over the full 24 columns equals the plain protocol
    full = run_protocol(small_dataset, small_cfg)[0]
    _, rep_all = ablate_dims(small_dataset, small_cfg, dims=[("pitch", "yaw", "roll")])
    assert rep_all["pitch+yaw+roll"].runs == full.runs
    with pytest.raises(ConfigError):
        ablate_dims(small_dataset, small_cfg, dims=[()])


def test_band_task_runs(tmp_path):
    cfg = SynthConfig(n_subjects_per_class=3, duration_s=150, severity_levels=DEFAULT_SEVERITY)
    manifest, series = gen_benchmark(cfg, tmp_path)
    ds = build_dataset(manifest, series, "bands")
    assert ds.control_label == "minimal"
    rc = RunConfig.from_dict({**SMALL, "dataset": {"task": "bands"},
                              "kineme": {"K": 3, "n_restarts": 1}})
    chunk, video = run_protocol(ds, rc, protocol="fixed-splits")
    assert len(chunk.runs) == 1
    assert 0 <= video.mean("f1") <= 1
