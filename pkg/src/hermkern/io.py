"""Kernel files: one JSON document per kernel.

    {"version": 1, "d1": .., "d2": .., "N1": .., "N2": ..,
     "ordering": "graded-lex", "entries": [...], "metadata": {...}}

``entries`` is the coefficient matrix flattened row-major, rows indexed by
output multi-index rank.  Floats are written with Python's shortest
round-trip representation, so reading a file back is bit exact.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .kernel_ops import KernelMatrix
from .multiindex import ORDERING, count

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def kernel_to_dict(K: KernelMatrix, metadata: dict | None = None) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "d1": K.d1,
        "d2": K.d2,
        "N1": K.N1,
        "N2": K.N2,
        "ordering": ORDERING,
        "entries": [float(v) for v in K.entries.ravel()],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def dumps(K: KernelMatrix, metadata: dict | None = None) -> str:
    return json.dumps(kernel_to_dict(K, metadata), indent=1, sort_keys=True) + "\n"


def write_kernel(path, K: KernelMatrix, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps(K, metadata))


def _int_field(doc: dict, key: str, minimum: int) -> int:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"field {key!r} must be an integer")
    if v < minimum:
        raise FormatError(f"field {key!r} must be >= {minimum}, got {v}")
    return v


def kernel_from_dict(doc) -> tuple[KernelMatrix, dict]:
    if not isinstance(doc, dict):
        raise FormatError("kernel file must hold a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"version must be {FORMAT_VERSION}, got {doc.get('version')!r}")
    if doc.get("ordering") != ORDERING:
        raise FormatError(f"ordering must be {ORDERING!r}, got {doc.get('ordering')!r}")
    d1, d2 = _int_field(doc, "d1", 1), _int_field(doc, "d2", 1)
    N1, N2 = _int_field(doc, "N1", 0), _int_field(doc, "N2", 0)
    try:
        rows, cols = count(d2, N2), count(d1, N1)
    except OverflowError as exc:
        raise FormatError(str(exc)) from None
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise FormatError("field 'entries' must be a list")
    if len(entries) != rows * cols:
        raise FormatError(f"entries length {len(entries)} != count(d2,N2) * count(d1,N1) = {rows * cols}")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entries):
        raise FormatError("entries must be numbers")
    A = np.array(entries, dtype=float).reshape(rows, cols)
    if not all(math.isfinite(v) for v in A.ravel()):
        raise FormatError("entries must be finite")
    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict):
        raise FormatError("field 'metadata' must be an object")
    return KernelMatrix(d1, d2, N1, N2, A), meta


def read_kernel(path) -> tuple[KernelMatrix, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return kernel_from_dict(doc)
