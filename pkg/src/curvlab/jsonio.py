"""JSON encodings of the public types.

Numbers are written as IEEE-754 doubles via ``repr`` so that
serialize -> parse -> serialize is byte-identical.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import ValidationError
from .tensor_core import BlockModelSpace, CurvTensor, SymForm


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=None, separators=(", ", ": "), allow_nan=False)


def _matrix(m) -> list[list[float]]:
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def form_to_json(phi: SymForm) -> dict:
    return {"dim": phi.dim, "entries": _matrix(phi.matrix)}


def form_from_json(obj: dict) -> SymForm:
    phi = SymForm(obj["entries"])
    if int(obj.get("dim", phi.dim)) != phi.dim:
        raise ValidationError(f"declared dim {obj['dim']} does not match a {phi.dim}x{phi.dim} matrix")
    return phi


def tensor_to_json(t: CurvTensor) -> dict:
    return {"dim": t.dim, "components": [float(x) for x in t.components.ravel()]}


def tensor_from_json(obj: dict, tol: float = 1e-12) -> CurvTensor:
    n = int(obj["dim"])
    flat = np.asarray(obj["components"], dtype=float)
    if flat.shape != (n ** 4,):
        raise ValidationError(f"expected {n ** 4} components for dim {n}, got {flat.size}")
    return CurvTensor(flat.reshape((n,) * 4), tol)


def model_to_json(model: BlockModelSpace) -> dict:
    blocks = []
    for f, c in zip(model.forms, model.scales):
        b: dict = {"dim": f.dim, "form": _matrix(f.matrix)}
        if c != 1.0:
            b["scale"] = c
        blocks.append(b)
    return {"blocks": blocks}


def model_from_json(obj: dict) -> BlockModelSpace:
    forms, scales = [], []
    for b in obj["blocks"]:
        phi = SymForm(b["form"])
        if int(b.get("dim", phi.dim)) != phi.dim:
            raise ValidationError(f"block declares dim {b['dim']} but its form is {phi.dim}x{phi.dim}")
        forms.append(phi)
        scales.append(float(b.get("scale", 1.0)))
    return BlockModelSpace(forms, scales)


def matrix_from_json(obj: Any) -> np.ndarray:
    """Accepts a bare nested list, ``{"matrix": [[...]]}`` or ``{"dim": N, "matrix": [[...]]}``."""
    if isinstance(obj, dict):
        obj = obj.get("matrix", obj.get("entries"))
    m = np.asarray(obj, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=float)
    return {"dim": m.shape[0], "matrix": _matrix(m)}
