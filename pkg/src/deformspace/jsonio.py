"""JSON emission with exact float round-trips.

Floats are written with 17 significant digits so 64-bit values survive a
parse/serialize cycle, and integral floats keep a trailing ".0" so they stay
floats on the way back. The CLI and the HTTP service share this writer, which
is what makes their outputs byte-comparable.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import InputError


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise InputError(f"cannot serialize non-finite float {x!r}")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _emit(obj, out: list) -> None:
    if isinstance(obj, (np.floating, float)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            if not isinstance(k, str):
                raise InputError(f"JSON object keys must be strings, got {type(k).__name__}")
            out.append(json.dumps(k))
            out.append(":")
            _emit(v, out)
        out.append("}")
    else:
        raise InputError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps(obj) -> str:
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def dump_path(obj, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(dumps(obj))
        f.write("\n")


def load_path(path):
    with open(path) as f:
        return json.load(f)
