# -*- coding: utf-8 -*-
"""
Prediction Files

Two JSONL formats sharing one header layout:
  - "hoi-detections": decoded, scored detections per image (what the
    evaluators consume);
  - "hoi-queries": the raw per-query predictions per image (what the
    `match` and `loss` subcommands consume).
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

from ..errors import ValidationError
from ..models.hoi_instance import HoiDetection, Prediction
from .jsonl import read_jsonl, write_jsonl
from .schemas import (
    DETECTION_RECORD_SCHEMA,
    FORMAT_VERSION,
    QUERY_RECORD_SCHEMA,
    RESULT_HEADER_SCHEMA,
    validate_record,
)

logger = logging.getLogger(__name__)


def _header(kind: str, n_obj_classes: int, n_act_classes: int) -> Dict[str, Any]:
    return {"type": "header", "format": kind, "version": FORMAT_VERSION,
            "n_obj_classes": n_obj_classes, "n_act_classes": n_act_classes}


def _read_header(path: Path, expected_format: str):
    lines = read_jsonl(path)
    lineno, header = lines[0]
    validate_record(header, RESULT_HEADER_SCHEMA, f"{path}:{lineno}")
    if header["format"] != expected_format:
        raise ValidationError(f"{path}: expected a '{expected_format}' file, found '{header['format']}'")
    return header, lines[1:]


@dataclass
class DetectionFile:
    n_obj_classes: int
    n_act_classes: int
    detections: Dict[str, List[HoiDetection]] = field(default_factory=dict)

    def validate(self) -> None:
        for image_id, dets in self.detections.items():
            for det in dets:
                if not 1 <= det.object_class <= self.n_obj_classes:
                    raise ValidationError(f"image '{image_id}': object class {det.object_class} out of range")
                if not 1 <= det.action_class <= self.n_act_classes:
                    raise ValidationError(f"image '{image_id}': action class {det.action_class} out of range")
                if not 0.0 <= det.score <= 1.0:
                    raise ValidationError(f"image '{image_id}': score {det.score} outside [0, 1]")

    def write(self, path: Union[str, Path]) -> None:
        self.validate()
        lines = [_header("hoi-detections", self.n_obj_classes, self.n_act_classes)]
        lines += [{"type": "image", "image_id": image_id, "detections": [det.to_dict() for det in dets]}
                  for image_id, dets in self.detections.items()]
        write_jsonl(path, lines)
        logger.info(f"Wrote detections for {len(self.detections)} images to {path}")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "DetectionFile":
        path = Path(path)
        header, lines = _read_header(path, "hoi-detections")
        detections: Dict[str, List[HoiDetection]] = {}
        for lineno, data in lines:
            validate_record(data, DETECTION_RECORD_SCHEMA, f"{path}:{lineno}")
            if data["image_id"] in detections:
                raise ValidationError(f"{path}:{lineno}: duplicate image id '{data['image_id']}'")
            detections[data["image_id"]] = [HoiDetection.from_dict(det) for det in data["detections"]]
        result = cls(header["n_obj_classes"], header["n_act_classes"], detections)
        result.validate()
        return result


@dataclass
class QueryPredictionFile:
    n_obj_classes: int
    n_act_classes: int
    predictions: Dict[str, List[Prediction]] = field(default_factory=dict)

    def validate(self) -> None:
        for image_id, preds in self.predictions.items():
            if not preds:
                raise ValidationError(f"image '{image_id}': no query predictions")
            for pred in preds:
                if pred.n_obj_classes != self.n_obj_classes or len(pred.action_probs) != self.n_act_classes:
                    raise ValidationError(f"image '{image_id}': prediction sizes do not match the header")
                try:
                    pred.validate()
                except ValidationError as e:
                    raise ValidationError(f"image '{image_id}': {e}") from e

    def write(self, path: Union[str, Path]) -> None:
        self.validate()
        lines = [_header("hoi-queries", self.n_obj_classes, self.n_act_classes)]
        lines += [{"type": "image", "image_id": image_id, "predictions": [p.to_dict() for p in preds]}
                  for image_id, preds in self.predictions.items()]
        write_jsonl(path, lines)
        logger.info(f"Wrote query predictions for {len(self.predictions)} images to {path}")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "QueryPredictionFile":
        path = Path(path)
        header, lines = _read_header(path, "hoi-queries")
        predictions: Dict[str, List[Prediction]] = {}
        for lineno, data in lines:
            validate_record(data, QUERY_RECORD_SCHEMA, f"{path}:{lineno}")
            if data["image_id"] in predictions:
                raise ValidationError(f"{path}:{lineno}: duplicate image id '{data['image_id']}'")
            predictions[data["image_id"]] = [Prediction.from_dict(p) for p in data["predictions"]]
        result = cls(header["n_obj_classes"], header["n_act_classes"], predictions)
        result.validate()
        return result
