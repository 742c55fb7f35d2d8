"""Deterministic JSON/CSV output with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from . import __version__


def _fmt_float(x: float) -> str:
    text = format(x, ".17g")
    # keep floats recognisable as floats after parsing
    if all(ch not in text for ch in ".eEn"):
        text += ".0"
    return text


def _encode(obj, indent: int, level: int, out: list) -> None:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        # JSON has no infinities; they are written as null
        out.append(_fmt_float(float(obj)) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(v, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        # short numeric rows (e.g. [re, im] pairs) stay on one line
        flat = all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in items)
        if flat and len(items) <= 4:
            out.append("[")
            for i, v in enumerate(items):
                out.append(", " if i else "")
                _encode(v, indent, level + 1, out)
            out.append("]")
            return
        out.append("[")
        for i, v in enumerate(items):
            out.append(("," if i else "") + pad)
            _encode(v, indent, level + 1, out)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    """JSON text with every float written to 17 significant digits."""
    out: list[str] = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def header(config_hash: str, seed: int, kind: str) -> dict:
    return {"tool": "dirac-hartree", "version": __version__, "kind": kind,
            "config_hash": config_hash, "seed": int(seed)}


def complex_pairs(c) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(c, dtype=complex)]


def from_pairs(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("coefficients must be a list of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def csv_text(head: dict, columns: list[str], rows) -> str:
    """CSV with '#'-prefixed header lines followed by a column-name row."""
    buf = io.StringIO()
    for k, v in head.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt_float(float(v)) for v in row])
    return buf.getvalue()
