"""
Operator Serialization

作用素の JSON 交換形式
{shape: [[dim, weight], ...], blocks: [[[ [re, im], ... ], ...], ...]}
"""

import json
import logging
from typing import Any

import numpy as np
from jsonschema import Draft7Validator

from ncerg.errors import AlgebraError

from .operator import Operator
from .shape import AlgebraShape

logger = logging.getLogger(__name__)

_COMPLEX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

SHAPE_SCHEMA: dict[str, Any] = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "array",
        "items": [
            {"type": "integer", "minimum": 1},
            {"type": "number", "exclusiveMinimum": 0},
        ],
        "minItems": 2,
        "maxItems": 2,
    },
}

OPERATOR_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["shape", "blocks"],
    "properties": {
        "shape": SHAPE_SCHEMA,
        "blocks": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
        },
    },
}

_validator = Draft7Validator(OPERATOR_SCHEMA)


def matrix_to_json(matrix: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def matrix_from_json(rows: list[list[list[float]]]) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)


def operator_to_json(x: Operator) -> dict[str, Any]:
    return {
        "shape": x.shape.to_pairs(),
        "blocks": [matrix_to_json(b) for b in x.blocks],
    }


def operator_from_json(document: dict[str, Any]) -> Operator:
    """
    JSON 文書から作用素を復元

    Args:
        document: OPERATOR_SCHEMA に従う辞書

    Returns:
        Operator: 復元された作用素
    """
    errors = sorted(_validator.iter_errors(document), key=lambda e: list(e.path))
    if errors:
        details = "; ".join(
            f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors
        )
        raise AlgebraError(f"Invalid operator document: {details}")
    shape = AlgebraShape.from_pairs(document["shape"])
    return Operator(shape, [matrix_from_json(b) for b in document["blocks"]])


def dumps_operator(x: Operator) -> str:
    return json.dumps(operator_to_json(x))


def loads_operator(text: str) -> Operator:
    return operator_from_json(json.loads(text))
