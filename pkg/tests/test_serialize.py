import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from headkin.errors import DataError, ParseError
from headkin.serialize import decode_array, encode_array, read_document, write_document


@given(arrays(np.float64, st.tuples(st.integers(0, 4), st.integers(0, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_float_roundtrip_bit_exact(a):
    b = decode_array(json.loads(json.dumps(encode_array(a))))
    assert b.shape == a.shape
    assert b.tobytes() == a.tobytes() or np.array_equal(b, a)  # -0.0 vs 0.0 allowed


@given(arrays(np.int64, st.integers(0, 10), elements=st.integers(-2 ** 62, 2 ** 62)))
def test_int_roundtrip(a):
    np.testing.assert_array_equal(decode_array(encode_array(a)), a)


def test_bool_roundtrip():
    a = np.array([[True, False], [False, True]])
    b = decode_array(encode_array(a))
    assert b.dtype == bool and (a == b).all()


def test_document_checks(tmp_path):
    p = tmp_path / "d.json"
    write_document(p, "thing", {"x": 1})
    assert read_document(p, "thing")["x"] == 1
    with pytest.raises(DataError):
        read_document(p, "other")
    with pytest.raises(DataError):
        read_document(tmp_path / "missing.json", "thing")
    p.write_text("{")
    with pytest.raises(ParseError):
        read_document(p, "thing")
    with pytest.raises(ParseError):
        decode_array({"shape": [2], "dtype": "float64", "data": "1 x"})
