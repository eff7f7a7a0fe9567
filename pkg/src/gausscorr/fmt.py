"""Deterministic text output: 17 significant digits in scientific notation."""

import json
import math


def fmt(v):
    return f"{float(v):.16e}"


def dumps(obj, indent=2, _level=0):
    """JSON text with every float written by :func:`fmt`; NaN becomes ``null``.

    ``indent=None`` gives a single line.
    """
    if obj is None or (isinstance(obj, float) and math.isnan(obj)):
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            raise ValueError("cannot encode an infinite value")
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item") and not isinstance(obj, (dict, list, tuple)):
        return dumps(obj.item(), indent, _level)
    if isinstance(obj, dict):
        items = [f"{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return _wrap("{", "}", items, indent, _level)
    if isinstance(obj, (list, tuple)):
        items = [dumps(v, indent, _level + 1) for v in obj]
        return _wrap("[", "]", items, indent, _level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _wrap(open_, close, items, indent, level):
    if not items:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(items) + close
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    return open_ + "\n" + ",\n".join(pad + i for i in items) + "\n" + end + close
