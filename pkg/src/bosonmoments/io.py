"""JSON encoding of matrices, instances and results with lossless floats."""

import json
import math

import numpy as np

from .errors import DimensionMismatch


def _float(x):
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_jsonable(obj):
    """Convert numpy values, complex numbers and dataclass-like objects to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """
    Serialise with every float written to 17 significant digits.

    Output is deterministic: dictionary keys keep insertion order.
    """
    obj = to_jsonable(obj)

    def write(x, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {write(v, level + 1)}" for k, v in x.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(x, list):
            if not x:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in x):
                return "[" + ", ".join(write(v, level + 1) for v in x) + "]"
            items = [pad + write(v, level + 1) for v in x]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        if isinstance(x, bool) or x is None:
            return json.dumps(x)
        if isinstance(x, float):
            return _float(x)
        return json.dumps(x)

    return write(obj, 0) + "\n"


def encode_matrix(M):
    """``{"n": rows, "entries": ...}``; complex entries become ``{"re", "im"}`` pairs."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {M.shape}")
    if np.iscomplexobj(M):
        entries = [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in M]
    else:
        entries = [[float(x) for x in row] for row in M]
    return {"n": int(M.shape[0]), "entries": entries}


def decode_matrix(obj):
    entries = obj["entries"]
    is_complex = any(isinstance(x, dict) for row in entries for x in row)
    if is_complex:
        M = np.array(
            [[complex(x["re"], x["im"]) if isinstance(x, dict) else complex(x) for x in row]
             for row in entries]
        )
    else:
        M = np.array(entries, dtype=float)
    if M.ndim != 2 or M.shape[0] != int(obj["n"]):
        raise DimensionMismatch("matrix entries do not match the declared size")
    return M


def decode_complex(obj):
    if isinstance(obj, dict):
        return complex(obj["re"], obj["im"])
    return complex(obj)


def make_instance(f, transform, mode, seed, metadata=None):
    return {
        "n": len(f),
        "f": [int(x) for x in f],
        "mode": mode,
        "transform": encode_matrix(transform),
        "seed": int(seed),
        "metadata": dict(metadata or {}),
    }


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_text(path, text):
    if path in (None, "-"):
        import sys

        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
