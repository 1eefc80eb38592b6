"""JSON problem configs ("gesens/1"): schema validation and operator construction."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError
from .ge import GEProblem, SolverConfig
from .hilbert import HilbertSpace
from .operators import AbsPhi, AffineOp, AffinePhi
from .qvi import QVIProblem
from .resolvents import BoxNormalCone, LinearMonotoneB, WeightedShrinkage

VERSION = "gesens/1"

_vec = {"type": "array", "items": {"type": ["number", "null"]}}
_mat = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

SCHEMA = {
    "type": "object",
    "required": ["version", "space", "A", "B"],
    "properties": {
        "version": {"const": VERSION},
        "space": {
            "type": "object",
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "gram": {"oneOf": [
                    {"const": "identity"},
                    {"type": "object", "required": ["diag"], "properties": {"diag": _vec}},
                    {"type": "object", "required": ["dense"], "properties": {"dense": _mat}},
                ]},
            },
        },
        "A": {
            "type": "object",
            "required": ["name", "matrix"],
            "properties": {
                "name": {"const": "affine"},
                "matrix": _mat,
                "param_matrix": _mat,
                "offset": _vec,
                "mu": {"type": "number"},
                "lip": {"type": "number"},
            },
        },
        "B": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"enum": ["box", "shrink", "linear"]},
                "lower": {"type": ["array", "number", "null"]},
                "upper": {"type": ["array", "number", "null"]},
                "matrix": _mat,
            },
        },
        "Phi": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"enum": ["affine", "abs"]},
                "matrix": _mat,
                "param_matrix": _mat,
                "offset": {"type": ["array", "number"]},
                "alpha": {"type": "number"},
                "tau": {"type": "number", "minimum": 0},
                "lip_phi": {"type": "number"},
            },
        },
        "constants": {
            "type": "object",
            "properties": {"mu": {"type": "number"}, "lip": {"type": "number"}, "lip_phi": {"type": "number"}},
        },
        "smallness_case": {"enum": ["A", "B", "auto"]},
        "potential": {"type": "boolean"},
        "solver": {
            "type": "object",
            "properties": {
                "rho": {"oneOf": [{"const": "auto"}, {"type": "number"}]},
                "tol_residual": {"type": "number"},
                "max_iters": {"type": "integer"},
                "y0": {"oneOf": [{"const": "zero"}, _vec]},
                "method": {"enum": ["fb", "newton"]},
            },
        },
        "seed": {"type": "integer"},
    },
}


@dataclass
class ProblemConfig:
    raw: dict
    space: HilbertSpace
    ge: GEProblem
    qvi: QVIProblem | None
    solver: SolverConfig
    seed: int


def _bound(v):
    if v is None or np.isscalar(v):
        return v
    return [None if x is None else float(x) for x in v]


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc


def build(doc: dict) -> ProblemConfig:
    validate(doc)
    space = HilbertSpace.from_config(doc["space"])
    consts = doc.get("constants", {})
    a = doc["A"]
    mu = consts.get("mu", a.get("mu"))
    lip = consts.get("lip", a.get("lip"))
    A = AffineOp(space, a["matrix"], a.get("param_matrix"), a.get("offset"), mu=mu, lip=lip)

    b = doc["B"]
    if b["name"] == "box":
        B = BoxNormalCone(space, _bound(b.get("lower")), _bound(b.get("upper")))
    elif b["name"] == "shrink":
        B = WeightedShrinkage(space)
    else:
        if "matrix" not in b:
            raise ConfigError("linear B needs 'matrix'")
        B = LinearMonotoneB(space, b["matrix"])

    qvi = None
    if "Phi" in doc:
        p = doc["Phi"]
        if p["name"] == "affine":
            Phi = AffinePhi(space, p.get("matrix"), p.get("param_matrix"), p.get("offset"),
                            lip_phi=consts.get("lip_phi", p.get("lip_phi")))
        else:
            if "alpha" not in p:
                raise ConfigError("abs Phi needs 'alpha'")
            Phi = AbsPhi(space, p["alpha"], p.get("offset"), p.get("param_matrix"), p.get("tau", 0.0))
        qvi = QVIProblem(space, A, B, Phi, doc.get("smallness_case", "auto"), bool(doc.get("potential", False)))

    s = doc.get("solver", {})
    y0 = s.get("y0", "zero")
    solver = SolverConfig(
        rho=s.get("rho", "auto"),
        tol_residual=s.get("tol_residual", 1e-10),
        max_iters=s.get("max_iters", 10_000),
        y0=y0 if y0 == "zero" else space.check(np.asarray(y0, dtype=float), "solver.y0"),
        method=s.get("method", "fb"),
    )
    seed = int(os.environ.get("GESENS_SEED", doc.get("seed", 0)))
    return ProblemConfig(doc, space, GEProblem(space, A, B), qvi, solver, seed)


def load(path) -> ProblemConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build(doc)


def parse_vector(text: str) -> np.ndarray:
    """Inline JSON (``"[1, 2]"`` or a scalar) or ``@path`` to a JSON / whitespace / CSV file."""
    text = text.strip()
    if text.startswith("@"):
        try:
            body = Path(text[1:]).read_text(encoding="utf-8").strip()
        except OSError as exc:
            raise ConfigError(f"cannot read vector file {text[1:]}: {exc}") from exc
        try:
            val: Any = json.loads(body)
        except json.JSONDecodeError:
            try:
                val = [float(x) for x in body.replace(",", " ").split()]
            except ValueError as exc:
                raise ConfigError(f"vector file {text[1:]} is neither JSON nor a number list") from exc
    else:
        try:
            val = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse vector {text!r}") from exc
    arr = np.atleast_1d(np.asarray(val, dtype=float))
    if arr.ndim != 1:
        raise ConfigError("vectors must be one-dimensional")
    return arr
