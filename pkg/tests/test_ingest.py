import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from headkin.errors import (
    DataError,
    DomainError,
    EmptyInputError,
    ParseError,
    SchemaError,
    UnusableSeriesError,
)
from headkin.ingest import (
    Manifest,
    PoseSchema,
    SubjectRecord,
    bdi_to_band,
    bdi_to_binary,
    clean_and_resample,
    load_headpose_csv,
    load_manifest,
    save_manifest,
    write_headpose_csv,
)

from conftest import make_series

HEADER = "frame,timestamp,pose_pitch,pose_yaw,pose_roll,success\n"


def write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_three_rows(tmp_path):
    rows = "".join(f"{i},{i / 30},0.1,0.0,-0.1,1\n" for i in range(3))
    s = load_headpose_csv(write(tmp_path, HEADER + rows), fps=30)
    assert len(s) == 3
    assert s.valid_mask.all()
    np.testing.assert_array_equal(s.pitch, [0.1] * 3)
    np.testing.assert_array_equal(s.roll, [-0.1] * 3)


def test_degrees_converted(tmp_path):
    p = write(tmp_path, HEADER + "0,0,90,0,0,1\n")
    s = load_headpose_csv(p, PoseSchema(units="degrees"), fps=30)
    assert abs(s.pitch[0] - math.pi / 2) < 1e-12


def test_missing_roll_column(tmp_path):
    p = write(tmp_path, "frame,pose_pitch,pose_yaw\n0,0,0\n")
    with pytest.raises(SchemaError, match="roll"):
        load_headpose_csv(p, fps=30)


def test_non_numeric_cell_reports_row(tmp_path):
    p = write(tmp_path, HEADER + "0,0,0.1,0,0,1\n1,0.03,abc,0,0,1\n")
    with pytest.raises(ParseError) as err:
        load_headpose_csv(p, fps=30)
    assert err.value.row == 1


def test_empty_file(tmp_path):
    with pytest.raises(EmptyInputError):
        load_headpose_csv(write(tmp_path, ""), fps=30)
    with pytest.raises(EmptyInputError):
        load_headpose_csv(write(tmp_path, HEADER, "h.csv"), fps=30)


def test_failed_rows_are_masked(tmp_path):
    p = write(tmp_path, HEADER + "0,0,0.1,0,0,1\n1,0.033,0.5,0.5,0.5,0\n")
    s = load_headpose_csv(p, fps=30)
    assert s.valid_mask.tolist() == [True, False]
    assert s.pitch[1] == 0.0


def test_fps_inferred_from_timestamps(tmp_path):
    rows = "".join(f"{i},{i * 0.04},0,0,0,1\n" for i in range(5))
    s = load_headpose_csv(write(tmp_path, HEADER + rows))
    assert abs(s.fps - 25.0) < 1e-9


def test_openface_style_header_whitespace(tmp_path):
    p = write(tmp_path, "frame, timestamp, pose_pitch, pose_yaw, pose_roll, success\n0, 0, 0.2, 0.1, 0, 1\n")
    s = load_headpose_csv(p, fps=30)
    assert s.pitch[0] == 0.2


def test_write_read_roundtrip(tmp_path, rng):
    s = make_series(rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50))
    write_headpose_csv(s, tmp_path / "r.csv")
    back = load_headpose_csv(tmp_path / "r.csv", fps=30)
    np.testing.assert_array_equal(back.pitch, s.pitch)
    np.testing.assert_array_equal(back.yaw, s.yaw)
    np.testing.assert_array_equal(back.valid_mask, s.valid_mask)


@given(st.lists(st.floats(-179.0, 179.0), min_size=1, max_size=20))
def test_unit_roundtrip(vals):
    back = np.rad2deg(np.deg2rad(np.array(vals)))
    np.testing.assert_allclose(back, vals, atol=1e-9, rtol=0)


def test_series_invariants():
    with pytest.raises(DataError):
        make_series([0.0, 4.0])
    with pytest.raises(DataError):
        make_series([0.0, np.nan])
    with pytest.raises(DataError):
        make_series([0.0], fps=0)
    with pytest.raises(EmptyInputError):
        make_series([])


def test_short_gap_interpolated():
    s = make_series([0.0, 0.7, 1.0], mask=[True, False, True])
    out = clean_and_resample(s, 30.0, max_gap_s=0.5)
    assert out.valid_mask.all()
    assert out.pitch[1] == 0.5


def test_long_gap_stays_invalid():
    mask = [True] + [False] * 20 + [True]
    s = make_series(np.zeros(22), mask=mask)
    out = clean_and_resample(s, 30.0, max_gap_s=0.5)
    assert not out.valid_mask[1:21].any()
    assert out.valid_mask[0] and out.valid_mask[-1]


def test_edge_gaps_not_extrapolated():
    s = make_series([0.0, 0.2, 0.3], mask=[False, True, True])
    out = clean_and_resample(s, 30.0)
    assert not out.valid_mask[0]


def test_identity_resample(rng):
    s = make_series(rng.uniform(-1, 1, 90), rng.uniform(-1, 1, 90))
    out = clean_and_resample(s, 30.0)
    np.testing.assert_array_equal(out.pitch, s.pitch)
    np.testing.assert_array_equal(out.yaw, s.yaw)
    again = clean_and_resample(out, 30.0)
    np.testing.assert_array_equal(again.pitch, out.pitch)
    np.testing.assert_array_equal(again.valid_mask, out.valid_mask)


def test_downsample_constant():
    s = make_series(np.full(60, 0.3), fps=60.0)
    out = clean_and_resample(s, 30.0)
    assert len(out) == 30
    assert out.fps == 30.0
    np.testing.assert_array_equal(out.pitch, 0.3)


def test_upsample_linear():
    s = make_series([0.0, 1.0, 2.0], fps=10.0)
    out = clean_and_resample(s, 20.0)
    np.testing.assert_allclose(out.pitch, [0, 0.5, 1, 1.5, 2])


def test_no_valid_frames():
    s = make_series([0.0, 0.0], mask=[False, False])
    with pytest.raises(UnusableSeriesError):
        clean_and_resample(s, 30.0)


@pytest.mark.parametrize("score,label", [(13, "control"), (14, "depressed"), (0, "control"), (63, "depressed")])
def test_bdi_to_binary(score, label):
    assert bdi_to_binary(score) == label


@pytest.mark.parametrize("score,band", [(19, "mild"), (28, "moderate"), (63, "severe"), (13, "minimal"),
                                        (14, "mild"), (20, "moderate"), (29, "severe")])
def test_bdi_to_band(score, band):
    assert bdi_to_band(score) == band


@pytest.mark.parametrize("bad", [-1, 64, 3.5])
def test_bdi_out_of_range(bad):
    with pytest.raises(DomainError):
        bdi_to_binary(bad)
    with pytest.raises(DomainError):
        bdi_to_band(bad)


@given(st.integers(0, 63))
def test_binary_band_consistency(score):
    assert (bdi_to_binary(score) == "control") == (bdi_to_band(score) == "minimal")


def test_subject_record_invariants():
    with pytest.raises(DataError):
        SubjectRecord("s", "a.csv")
    with pytest.raises(DomainError):
        SubjectRecord("s", "a.csv", bdi_score=70)
    r = SubjectRecord("s", "a.csv", bdi_score=22)
    assert r.label("binary") == "depressed"
    assert r.label("bands") == "moderate"
    assert SubjectRecord("s", "a.csv", binary_label="mild").label("binary") == "depressed"


def test_manifest_roundtrip_and_uniqueness(tmp_path):
    recs = [SubjectRecord("a", "a.csv", 5, "control", "train"),
            SubjectRecord("b", "b.csv", binary_label="depressed", split="test")]
    m = Manifest(recs, "demo")
    save_manifest(m, tmp_path / "m.json")
    back = load_manifest(tmp_path / "m.json")
    assert back.records == m.records
    assert back.dataset_name == "demo"
    assert back.resolve(back.records[0]) == tmp_path / "a.csv"
    with pytest.raises(DataError):
        Manifest(recs + [recs[0]])
