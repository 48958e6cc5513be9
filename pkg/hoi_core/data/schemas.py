# -*- coding: utf-8 -*-
"""
JSON schemas for the line-delimited file formats. Each file starts with a
header line ({"type": "header", "format": ..., "version": ...}) followed by
one record per line.
"""

from typing import Any, Dict

from jsonschema import Draft7Validator
from jsonschema.exceptions import ValidationError as SchemaValidationError

from ..errors import ValidationError

FORMAT_VERSION = 1

_BOX = {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 4, "maxItems": 4}
_PROBS = {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1}
_CLASS_INDEX = {"type": "integer", "minimum": 1}

GT_INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["human_box", "object_box", "object_class", "actions"],
    "properties": {
        "human_box": _BOX,
        "object_box": _BOX,
        "object_class": _CLASS_INDEX,
        "actions": {"type": "array", "items": {"enum": [0, 1]}, "minItems": 1},
        "has_object": {"type": "boolean"},
    },
    "additionalProperties": False,
}

DATASET_HEADER_SCHEMA = {
    "type": "object",
    "required": ["type", "format", "version", "n_obj_classes", "n_act_classes", "object_names",
                 "action_names", "hoi_counts", "image_h", "image_w"],
    "properties": {
        "type": {"const": "header"},
        "format": {"const": "hoi-dataset"},
        "version": {"const": FORMAT_VERSION},
        "n_obj_classes": {"type": "integer", "minimum": 1},
        "n_act_classes": {"type": "integer", "minimum": 1},
        "object_names": {"type": "array", "items": {"type": "string"}},
        "action_names": {"type": "array", "items": {"type": "string"}},
        "hoi_counts": {"type": "object", "patternProperties": {"^[0-9]+$": {"type": "integer", "minimum": 0}},
                       "additionalProperties": False},
        "image_h": {"type": "integer", "minimum": 1},
        "image_w": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

IMAGE_RECORD_SCHEMA = {
    "type": "object",
    "required": ["type", "image_id", "instances"],
    "properties": {
        "type": {"const": "image"},
        "image_id": {"type": "string", "minLength": 1},
        "raster": {"type": ["string", "null"]},
        "generator_seed": {"type": ["integer", "null"]},
        "instances": {"type": "array", "items": GT_INSTANCE_SCHEMA},
    },
    "additionalProperties": False,
}

DETECTION_SCHEMA = {
    "type": "object",
    "required": ["human_box", "object_box", "object_class", "action_class", "score"],
    "properties": {
        "human_box": _BOX,
        "object_box": _BOX,
        "object_class": _CLASS_INDEX,
        "action_class": _CLASS_INDEX,
        "score": {"type": "number", "minimum": 0, "maximum": 1},
        "query_index": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

PREDICTION_SCHEMA = {
    "type": "object",
    "required": ["human_box", "object_box", "object_probs", "action_probs"],
    "properties": {
        "human_box": _BOX,
        "object_box": _BOX,
        "object_probs": _PROBS,
        "action_probs": _PROBS,
    },
    "additionalProperties": False,
}

RESULT_HEADER_SCHEMA = {
    "type": "object",
    "required": ["type", "format", "version", "n_obj_classes", "n_act_classes"],
    "properties": {
        "type": {"const": "header"},
        "format": {"enum": ["hoi-detections", "hoi-queries"]},
        "version": {"const": FORMAT_VERSION},
        "n_obj_classes": {"type": "integer", "minimum": 1},
        "n_act_classes": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

DETECTION_RECORD_SCHEMA = {
    "type": "object",
    "required": ["type", "image_id", "detections"],
    "properties": {
        "type": {"const": "image"},
        "image_id": {"type": "string", "minLength": 1},
        "detections": {"type": "array", "items": DETECTION_SCHEMA},
    },
    "additionalProperties": False,
}

QUERY_RECORD_SCHEMA = {
    "type": "object",
    "required": ["type", "image_id", "predictions"],
    "properties": {
        "type": {"const": "image"},
        "image_id": {"type": "string", "minLength": 1},
        "predictions": {"type": "array", "items": PREDICTION_SCHEMA, "minItems": 1},
    },
    "additionalProperties": False,
}

CHECKPOINT_HEADER_SCHEMA = {
    "type": "object",
    "required": ["type", "format", "version", "model_config"],
    "properties": {
        "type": {"const": "header"},
        "format": {"const": "hoi-checkpoint"},
        "version": {"const": FORMAT_VERSION},
        "model_config": {"type": "object"},
    },
    "additionalProperties": False,
}

CHECKPOINT_PARAM_SCHEMA = {
    "type": "object",
    "required": ["type", "name", "shape", "values"],
    "properties": {
        "type": {"const": "param"},
        "name": {"type": "string", "minLength": 1},
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "values": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

_VALIDATORS: Dict[int, Draft7Validator] = {}


def validate_record(record: Any, schema: Dict[str, Any], where: str) -> None:
    """Raise ValidationError naming `where` (file and line) when `record` violates `schema`."""
    validator = _VALIDATORS.get(id(schema))
    if validator is None:
        validator = _VALIDATORS[id(schema)] = Draft7Validator(schema)
    try:
        validator.validate(record)
    except SchemaValidationError as e:
        location = "/".join(str(part) for part in e.absolute_path) or "<record>"
        raise ValidationError(f"{where}: {location}: {e.message}") from e
