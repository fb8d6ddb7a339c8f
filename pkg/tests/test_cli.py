import csv
import json

import pytest

from headkin.cli import main

CONFIG = {
    "synth": {"n_subjects_per_class": 6, "duration_s": 300},
    "protocol": {"k": 3, "repetitions": 1, "inner_k": 2},
    "classifier": {"family": "SVC", "grid": {"kernel": ["rbf"], "C": [1.0, 10.0], "gamma": ["scale"]}},
    "ablate": {"lengths": [30, 60]},
}


def run(tmp_path, *args, config=CONFIG, out="out"):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    return main(["--config", str(cfg_path), "--out", str(tmp_path / out), *args])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    assert run(tmp, "synth") == 0
    return tmp


def test_synth_writes_benchmark(workspace):
    bench = workspace / "out" / "benchmark"
    manifest = json.loads((bench / "manifest.json").read_text())
    assert len(manifest["records"]) == 12
    meta = json.loads((bench / "manifest.json.meta.json").read_text())
    assert meta["config"]["synth"]["n_subjects_per_class"] == 6 and meta["seed"] == 0


def test_full_pipeline(workspace):
    for cmd in ("fit-kinemes", "featurize", "train-eval"):
        assert run(workspace, cmd) == 0, cmd
    out = workspace / "out"
    for level in ("chunk", "video"):
        rep = json.loads((out / f"report_{level}.json").read_text())
        assert rep["level"] == level and len(rep["runs"]) == 3
        assert rep["config"]["protocol"]["k"] == 3 and rep["seed"] == 0
    model = json.loads((out / "kinemes.json").read_text())
    assert model["kind"] == "kineme_model" and model["config"]["run_config"]["seed"] == 0
    with open(out / "features_HCKD.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows[0]) == 3 + 24 and len(rows) == 1 + 12 * 5
    assert json.loads((out / "features_HCKD.csv.meta.json").read_text())["config"]["mode"] == "HCKD"


def test_export_kinemes_k16(workspace):
    assert run(workspace, "fit-kinemes") == 0
    assert run(workspace, "export-kinemes", "--model", str(workspace / "out" / "kinemes.json")) == 0
    with open(workspace / "out" / "kineme_trajectories.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16 * 150
    assert [int(r["kineme_id"]) for r in rows[::150]] == list(range(16))
    assert set(rows[0]) == {"kineme_id", "frame", "time_s", "pitch", "yaw", "roll"}


def test_ablate_commands(workspace):
    assert run(workspace, "ablate", "--which", "chunk-length") == 0
    assert run(workspace, "ablate", "--which", "dims") == 0
    with open(workspace / "out" / "ablate_chunk-length.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 4
    with open(workspace / "out" / "ablate_dims.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 6


FILES = ("kinemes.json", "features_HCKD.csv", "features_HCKD.csv.meta.json",
         "report_chunk.json", "report_video.json")


def _pipeline(workspace, *extra):
    cfg = dict(CONFIG, dataset={"manifest": str(workspace / "out" / "benchmark" / "manifest.json")})
    cfg_path = workspace / "det.json"
    cfg_path.write_text(json.dumps(cfg))
    for cmd in ("fit-kinemes", "featurize", "train-eval"):
        assert main(["--config", str(cfg_path), "--out", str(workspace / "det"), *extra, cmd]) == 0
    return {f: (workspace / "det" / f).read_bytes() for f in FILES}


def test_outputs_deterministic_across_reruns_and_workers(workspace):
    first = _pipeline(workspace)
    assert _pipeline(workspace) == first
    parallel = _pipeline(workspace, "--workers", "2")
    # only the recorded worker count differs
    for f, data in first.items():
        other = parallel[f].replace(b'"workers": 2', b'"workers": 1')
        assert other == data, f


def test_seed_flag_changes_outputs(workspace):
    assert run(workspace, "--seed", "5", "synth", out="seeded") == 0
    a = (workspace / "out" / "benchmark" / "poses" / "control_000.csv").read_bytes()
    b = (workspace / "seeded" / "benchmark" / "poses" / "control_000.csv").read_bytes()
    assert a != b


def test_invalid_config_exit_code(tmp_path, capsys):
    assert run(tmp_path, "synth", config={"segmentation": {"chunk_len_s": 2}}) == 1
    err = capsys.readouterr().err
    assert "ConfigError" in err and "chunk_len_s" in err


def test_unreadable_config(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "none.json"), "synth"]) == 1
    assert "cannot read configuration" in capsys.readouterr().err


def test_missing_dataset_is_config_error(tmp_path, capsys):
    assert run(tmp_path, "train-eval", config={}) == 1
    assert "manifest" in capsys.readouterr().err


def test_missing_pose_file_is_data_error(tmp_path, capsys):
    (tmp_path / "m.json").write_text(json.dumps(
        {"dataset_name": "x", "records": [{"subject_id": "a", "path": "nope.csv", "label": "control"}]}))
    assert run(tmp_path, "train-eval", config={"dataset": {"manifest": str(tmp_path / "m.json")}}) == 2


def test_missing_model_for_export(tmp_path, capsys):
    assert run(tmp_path, "export-kinemes", "--model", str(tmp_path / "x.json")) == 1


def test_usage_errors(capsys):
    assert main(["bogus"]) == 1
    assert main([]) == 1
    assert main(["ablate"]) == 1


def test_insufficient_data_exit_code(tmp_path):
    cfg = dict(CONFIG, synth={"n_subjects_per_class": 3, "duration_s": 30})
    assert run(tmp_path, "synth", config=cfg) == 0
    assert run(tmp_path, "fit-kinemes", config=cfg) == 2
