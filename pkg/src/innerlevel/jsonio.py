"""Deterministic JSON: fixed key order as built, floats at 17 significant digits."""

from __future__ import annotations

import json
import math

import numpy as np

SCHEMA = "innerlevel/v1"


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    text = format(x, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _emit(obj, indent: int | None, depth: int) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _emit({"re": obj.real, "im": obj.imag}, indent, depth)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "to_json"):
        return _emit(obj.to_json(), indent, depth)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (depth + 1))
    end = "" if indent is None else "\n" + " " * (indent * depth)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _emit(v, indent, depth + 1) for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _emit(v, indent, depth + 1) for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    return _emit(obj, indent, 0) + "\n"


def with_schema(kind: str, body: dict) -> dict:
    out = {"schema": SCHEMA, "kind": kind}
    out.update({k: v for k, v in body.items() if k not in ("schema", "kind")})
    return out
