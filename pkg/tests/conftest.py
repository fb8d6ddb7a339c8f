import numpy as np
import pytest

from headkin.ingest import HeadPoseSeries
from headkin.segment import Segment


def make_series(pitch, yaw=None, roll=None, fps=30.0, mask=None, rid="rec"):
    pitch = np.asarray(pitch, dtype=float)
    yaw = np.zeros_like(pitch) if yaw is None else np.asarray(yaw, dtype=float)
    roll = np.zeros_like(pitch) if roll is None else np.asarray(roll, dtype=float)
    mask = np.ones(len(pitch), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    return HeadPoseSeries("subj", rid, fps, pitch, yaw, roll, mask)


def make_segment(values, rid="rec", start=0):
    return Segment(rid, start, np.asarray(values, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, when that module ran."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "ATTEMPTED", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.ATTEMPTED):
        ok, detail = mod.RESULTS.get(n, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
