"""JSON conventions shared by the CLI, the corpus and the report files.

Matrices serialise as nested lists of [re, im] pairs (row-major); every
report carries schema_version, tool version, the seed in effect and SHA-256
hashes of its input files.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from . import __version__
from .povm import Assemblage, ParentPovm, Povm
from .steering import BipartiteState, StateAssemblage

SCHEMA_VERSION = 1


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_json(j: Any) -> np.ndarray:
    try:
        arr = np.asarray(j, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"matrix entries must be [re, im] number pairs: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"matrix must be a nested list of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def vector_to_json(v: np.ndarray) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex).ravel()]


def povm_to_json(m: Povm) -> dict:
    return {"dim": m.dim, "elements": [matrix_to_json(e) for e in m.elements]}


def povm_from_json(j: dict) -> Povm:
    if not isinstance(j, dict) or "dim" not in j or "elements" not in j:
        raise ValueError("povm JSON must have 'dim' and 'elements'")
    return Povm(int(j["dim"]), [matrix_from_json(e) for e in j["elements"]])


def assemblage_to_json(a: Assemblage) -> dict:
    return {
        "dim": a.dim,
        "measurements": [
            {"elements": [matrix_to_json(e) for e in m.elements]} for m in a.measurements
        ],
    }


def assemblage_from_json(j: dict) -> Assemblage:
    if not isinstance(j, dict) or "dim" not in j or "measurements" not in j:
        raise ValueError("assemblage JSON must have 'dim' and 'measurements'")
    d = int(j["dim"])
    ms = []
    for k, mj in enumerate(j["measurements"]):
        if "elements" not in mj:
            raise ValueError(f"measurement {k} lacks 'elements'")
        ms.append(Povm(d, [matrix_from_json(e) for e in mj["elements"]]))
    return Assemblage(d, ms)


def parent_to_json(p: ParentPovm) -> dict:
    return {
        "dim": p.dim,
        "outcome_labels": [list(lab) for lab in p.outcome_labels],
        "elements": [matrix_to_json(e) for e in p.elements],
    }


def state_to_json(s: BipartiteState) -> dict:
    return {"dA": s.dA, "dB": s.dB, "matrix": matrix_to_json(s.matrix)}


def state_from_json(j: dict) -> BipartiteState:
    if not isinstance(j, dict) or not {"dA", "dB", "matrix"} <= set(j):
        raise ValueError("state JSON must have 'dA', 'dB' and 'matrix'")
    return BipartiteState(int(j["dA"]), int(j["dB"]), matrix_from_json(j["matrix"]))


def state_assemblage_to_json(sa: StateAssemblage) -> dict:
    return {
        "dB": sa.dB,
        "sigmas": [[matrix_to_json(s) for s in row] for row in sa.sigmas],
        "reduced": matrix_to_json(sa.reduced),
    }


def state_assemblage_from_json(j: dict) -> StateAssemblage:
    if not isinstance(j, dict) or not {"dB", "sigmas", "reduced"} <= set(j):
        raise ValueError("state assemblage JSON must have 'dB', 'sigmas' and 'reduced'")
    return StateAssemblage(
        int(j["dB"]),
        [[matrix_from_json(s) for s in row] for row in j["sigmas"]],
        matrix_from_json(j["reduced"]),
    )


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def report_skeleton(command: str, seed, inputs: dict[str, str]) -> dict:
    """Common header every CLI report starts from; `inputs` maps each input
    label (a file path or a builtin key) to its SHA-256 hash."""
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "seed": seed,
        "inputs": dict(inputs),
    }


# --- JSON Schemas (draft-07), published under docs/schema -----------------

_MATRIX_SCHEMA = {
    "type": "array",
    "items": {
        "type": "array",
        "items": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
    },
    "description": "complex matrix, row-major, entries as [re, im]",
}

ASSEMBLAGE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "assemblage.schema.json",
    "title": "Measurement assemblage",
    "type": "object",
    "required": ["dim", "measurements"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "measurements": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["elements"],
                "properties": {
                    "elements": {"type": "array", "minItems": 1, "items": _MATRIX_SCHEMA}
                },
            },
        },
    },
}

STATE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "state.schema.json",
    "title": "Bipartite state",
    "type": "object",
    "required": ["dA", "dB", "matrix"],
    "properties": {
        "dA": {"type": "integer", "minimum": 1},
        "dB": {"type": "integer", "minimum": 1},
        "matrix": _MATRIX_SCHEMA,
    },
}

STATE_ASSEMBLAGE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "state_assemblage.schema.json",
    "title": "State assemblage",
    "type": "object",
    "required": ["dB", "sigmas", "reduced"],
    "properties": {
        "dB": {"type": "integer", "minimum": 1},
        "sigmas": {
            "type": "array",
            "items": {"type": "array", "items": _MATRIX_SCHEMA},
        },
        "reduced": _MATRIX_SCHEMA,
    },
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "report.schema.json",
    "title": "Analysis report",
    "type": "object",
    "required": ["schema_version", "version", "command", "seed", "inputs", "results"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "version": {"type": "string"},
        "command": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "inputs": {
            "type": "object",
            "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        },
        "results": {"type": "object"},
    },
}

SCHEMAS = {
    "assemblage.schema.json": ASSEMBLAGE_SCHEMA,
    "state.schema.json": STATE_SCHEMA,
    "state_assemblage.schema.json": STATE_ASSEMBLAGE_SCHEMA,
    "report.schema.json": REPORT_SCHEMA,
}
