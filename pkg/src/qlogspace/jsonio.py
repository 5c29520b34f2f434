"""JSON formats for matrices, vectors, permutations, programs, sources and circuits.

Complex numbers are ``[re, im]`` pairs; matrices are row-major. Floats are
written with Python's shortest round-trip ``repr``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .channels import ChannelProgram, ChannelStep
from .circuit import Circuit, FourierOp, GateOp, RegisterLayout, TwoLevelOp
from .exceptions import ValidationError
from .learning import SampleSource
from .synthesis import Permutation


def _pair(z) -> list[float]:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError("non-finite entry")
    return [float(z.real), float(z.imag)]


def _unpair(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise ValidationError(f"expected [re, im], got {x!r}")
    z = complex(float(x[0]), float(x[1]))
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError("non-finite entry")
    return z


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValidationError("matrix must be two-dimensional")
    return {"rows": A.shape[0], "cols": A.shape[1], "entries": [_pair(z) for z in A.reshape(-1)]}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad matrix JSON: {exc}") from None
    if len(entries) != rows * cols:
        raise ValidationError("matrix entries length != rows * cols")
    return np.array([_unpair(x) for x in entries], dtype=complex).reshape(rows, cols)


def vector_to_json(v) -> dict:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return {"dim": v.shape[0], "entries": [_pair(z) for z in v]}


def vector_from_json(obj: dict) -> np.ndarray:
    try:
        dim, entries = int(obj["dim"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad vector JSON: {exc}") from None
    if len(entries) != dim:
        raise ValidationError("vector entries length != dim")
    return np.array([_unpair(x) for x in entries], dtype=complex)


def permutation_to_json(sigma: Permutation) -> dict:
    return {"m": sigma.m, "images": list(sigma.images)}


def permutation_from_json(obj: dict) -> Permutation:
    images = obj.get("images") if isinstance(obj, dict) else None
    if images is None or ("m" in obj and int(obj["m"]) != len(images)):
        raise ValidationError("bad permutation JSON")
    return Permutation(tuple(images))


def program_to_json(prog: ChannelProgram) -> dict:
    return {
        "space": prog.space,
        "steps": [{"kraus": [matrix_to_json(E) for E in s.kraus]} for s in prog.steps],
        "measurement": [[int(x) for x in M] for M in prog.measurement],
    }


def program_from_json(obj: dict) -> ChannelProgram:
    try:
        steps = tuple(ChannelStep(tuple(matrix_from_json(E) for E in s["kraus"])) for s in obj["steps"])
        return ChannelProgram(int(obj["space"]), steps, tuple(np.asarray(M, dtype=float) for M in obj["measurement"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad program JSON: {exc}") from None


def source_to_json(src: SampleSource) -> dict:
    return {
        "m": src.m,
        "samples": [
            {"prob": float(p), "kraus": [matrix_to_json(E) for E in s.kraus]} for p, s in zip(src.probs, src.steps)
        ],
    }


def source_from_json(obj: dict) -> SampleSource:
    try:
        samples = obj["samples"]
        probs = [float(s["prob"]) for s in samples]
        steps = [ChannelStep(tuple(matrix_from_json(E) for E in s["kraus"])) for s in samples]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad source JSON: {exc}") from None
    src = SampleSource(np.array(probs), steps)
    if "m" in obj and int(obj["m"]) != src.m:
        raise ValidationError("source m does not match the Kraus operators")
    return src


def _op_to_json(op) -> dict:
    base = {"targets": list(op.targets), "controls": [[n, int(v)] for n, v in op.controls], "label": op.label}
    if isinstance(op, FourierOp):
        return {"kind": "fourier", "inverse": op.inverse, **base}
    if isinstance(op, TwoLevelOp):
        return {"kind": "two_level", "i": op.i, "j": op.j, "block": matrix_to_json(op.block), **base}
    return {"kind": "gate", "unitary": matrix_to_json(op.unitary), **base}


def _op_from_json(obj: dict):
    kind = obj.get("kind", "gate")
    controls = tuple((str(n), int(v)) for n, v in obj.get("controls", []))
    label = obj.get("label", "")
    targets = tuple(obj["targets"])
    if kind == "fourier":
        if len(targets) != 1:
            raise ValidationError("a Fourier op has one target register")
        return FourierOp(targets[0], bool(obj.get("inverse", False)), controls, label)
    if kind == "two_level":
        return TwoLevelOp(targets, int(obj["i"]), int(obj["j"]), matrix_from_json(obj["block"]), controls, label)
    if kind == "gate":
        return GateOp(targets, matrix_from_json(obj["unitary"]), controls, label)
    raise ValidationError(f"unknown op kind {kind!r}")


def circuit_to_json(circuit: Circuit) -> dict:
    return {
        "layout": [{"name": n, "dim": d} for n, d in circuit.layout.registers],
        "ops": [_op_to_json(op) for op in circuit.ops],
    }


def circuit_from_json(obj: dict, cap: int | None = None) -> Circuit:
    try:
        layout = RegisterLayout(tuple((r["name"], int(r["dim"])) for r in obj["layout"]), cap=cap)
        return Circuit(layout, [_op_from_json(o) for o in obj["ops"]])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad circuit JSON: {exc}") from None


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None


def to_plain(x: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers to JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return _pair(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def dumps(obj: Any) -> str:
    return json.dumps(to_plain(obj), indent=2, sort_keys=True, allow_nan=False)
