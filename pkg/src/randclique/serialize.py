"""Deterministic text output helpers.

All files this package emits format floats with 17 significant digits
(round-trip exact for IEEE doubles), sort JSON object keys, and use "\n"
newlines, so identical inputs produce byte-identical outputs regardless of
platform or worker count.
"""
from __future__ import annotations

import json
import math


def fmt17(x: float) -> str:
    """17-significant-digit decimal form of a float (exact round trip)."""
    return "%.17g" % float(x)


def dumps_canonical(obj, indent: int = 0) -> str:
    """JSON text with sorted keys and fmt17 floats.

    NaN/inf floats are not representable in JSON and are emitted as null.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return fmt17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [dumps_canonical(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            inner + json.dumps(str(k)) + ": " + dumps_canonical(obj[k], indent + 1)
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_canonical_json(obj, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")
