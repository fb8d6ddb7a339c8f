"""Classification metrics with class-size weighting."""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, ShapeError

POSITIVE_LABELS = ("depressed", 1)


def _labels(a):
    a = np.asarray(a)
    if a.dtype.kind in "US":
        return a.astype(str)
    return a


def per_class_prf(y_true, y_pred, labels):
    """Precision, recall, F1 and support for each label (0 on empty denominators)."""
    rows = []
    for c in labels:
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        pr = tp / (tp + fp) if tp + fp else 0.0
        re = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        rows.append((pr, re, f1, tp + fn))
    return rows


def _is_binary(labels) -> bool:
    s = set(labels.tolist())
    return s <= {"control", "depressed"} or s <= {0, 1}


def metrics(y_true, y_pred) -> tuple:
    """(accuracy, weighted F1, precision, recall).

    Weighted F1 averages per-class F1 with weights equal to each class's
    share of ``y_true``. For the binary control/depressed task precision
    and recall refer to the depressed class (or ``1``); otherwise they are
    support-weighted averages like F1.
    """
    y_true, y_pred = _labels(y_true), _labels(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError(f"label arrays differ in shape: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise EmptyInputError("no labels to score")
    labels = np.unique(np.concatenate([y_true, y_pred]))
    rows = per_class_prf(y_true, y_pred, labels)
    n = y_true.size
    acc = float(np.mean(y_true == y_pred))
    support = np.array([r[3] for r in rows], dtype=float)
    w = support / n
    f1 = float(np.dot(w, [r[2] for r in rows]))
    if _is_binary(labels):
        pos = "depressed" if labels.dtype.kind == "U" else 1
        pr, re = 0.0, 0.0
        for c, r in zip(labels, rows):
            if c == pos:
                pr, re = r[0], r[1]
        if pos not in labels.tolist():
            pr, re = 0.0, 0.0
    else:
        pr = float(np.dot(w, [r[0] for r in rows]))
        re = float(np.dot(w, [r[1] for r in rows]))
    return acc, f1, float(pr), float(re)


def weighted_f1(y_true, y_pred) -> float:
    return metrics(y_true, y_pred)[1]
