"""Structured-text persistence shared by kineme models, trained
classifiers and reports.

Documents are JSON. Float arrays are stored as whitespace-separated decimal
text with 17 significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError

FORMAT = "headkin"
VERSION = 1


def encode_array(a) -> dict:
    a = np.asarray(a)
    if a.dtype.kind in "iub":
        data = " ".join(str(int(x)) for x in a.ravel())
        dtype = "int64" if a.dtype.kind != "b" else "bool"
    else:
        data = " ".join(format(float(x), ".17g") for x in a.ravel())
        dtype = "float64"
    return {"shape": list(a.shape), "dtype": dtype, "data": data}


def decode_array(d: dict) -> np.ndarray:
    try:
        shape = tuple(d["shape"])
        tokens = d["data"].split()
        if d["dtype"] == "float64":
            a = np.array([float(t) for t in tokens], dtype=float)
        elif d["dtype"] == "bool":
            a = np.array([int(t) for t in tokens], dtype=bool)
        else:
            a = np.array([int(t) for t in tokens], dtype=np.int64)
        return a.reshape(shape)
    except (KeyError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed array record: {exc}") from None


def write_document(path, kind: str, body: dict):
    doc = {"format": FORMAT, "version": VERSION, "kind": kind}
    doc.update(body)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n")


def read_document(path, kind: str) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if doc.get("format") != FORMAT or doc.get("kind") != kind:
        raise DataError(f"{path}: not a {kind} document")
    return doc
