# -*- coding: utf-8 -*-
"""
Dataset File

A dataset lives in a directory holding `dataset.jsonl` and an `images/`
folder of raster sidecars. The JSONL header carries the class vocabulary and
the per-HOI-class training counts used for the rare split; each following
line is one image record with its ground-truth instances. Rasters are
float64 arrays of shape (3, H, W) with values in [0, 1], stored with
`numpy.save`.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from ..errors import ValidationError
from ..models.hoi_instance import GtInstance, hoi_class_id
from .jsonl import read_jsonl, write_jsonl
from .schemas import DATASET_HEADER_SCHEMA, FORMAT_VERSION, IMAGE_RECORD_SCHEMA, validate_record

logger = logging.getLogger(__name__)

DATASET_FILENAME = "dataset.jsonl"
IMAGES_DIRNAME = "images"


@dataclass
class DatasetHeader:
    n_obj_classes: int
    n_act_classes: int
    object_names: List[str]
    action_names: List[str]
    hoi_counts: Dict[int, int]
    image_h: int
    image_w: int

    def validate(self) -> None:
        if len(self.object_names) != self.n_obj_classes:
            raise ValidationError(f"{len(self.object_names)} object names for {self.n_obj_classes} classes")
        if len(self.action_names) != self.n_act_classes:
            raise ValidationError(f"{len(self.action_names)} action names for {self.n_act_classes} classes")
        n_hoi = self.n_obj_classes * self.n_act_classes
        for hoi_class, count in self.hoi_counts.items():
            if not 1 <= hoi_class <= n_hoi:
                raise ValidationError(f"HOI class {hoi_class} in counts outside [1, {n_hoi}]")
            if count < 0:
                raise ValidationError(f"negative count for HOI class {hoi_class}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "header",
            "format": "hoi-dataset",
            "version": FORMAT_VERSION,
            "n_obj_classes": self.n_obj_classes,
            "n_act_classes": self.n_act_classes,
            "object_names": list(self.object_names),
            "action_names": list(self.action_names),
            "hoi_counts": {str(k): v for k, v in sorted(self.hoi_counts.items())},
            "image_h": self.image_h,
            "image_w": self.image_w,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetHeader":
        return cls(
            n_obj_classes=data["n_obj_classes"],
            n_act_classes=data["n_act_classes"],
            object_names=list(data["object_names"]),
            action_names=list(data["action_names"]),
            hoi_counts={int(k): int(v) for k, v in data["hoi_counts"].items()},
            image_h=data["image_h"],
            image_w=data["image_w"],
        )


@dataclass
class ImageRecord:
    image_id: str
    instances: List[GtInstance]
    raster: Optional[np.ndarray] = None
    generator_seed: Optional[int] = None

    def to_dict(self, raster_path: Optional[str]) -> Dict[str, Any]:
        return {
            "type": "image",
            "image_id": self.image_id,
            "raster": raster_path,
            "generator_seed": self.generator_seed,
            "instances": [gt.to_dict() for gt in self.instances],
        }


@dataclass
class HoiDataset:
    header: DatasetHeader
    records: List[ImageRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def image_ids(self) -> List[str]:
        return [record.image_id for record in self.records]

    def gts_per_image(self) -> Dict[str, List[GtInstance]]:
        return {record.image_id: list(record.instances) for record in self.records}

    def images_tensor(self) -> torch.Tensor:
        """[N, 3, H, W] float64 rasters in record order."""
        missing = [record.image_id for record in self.records if record.raster is None]
        if missing:
            raise ValidationError(f"images without rasters: {', '.join(missing[:5])}")
        return torch.from_numpy(np.stack([record.raster for record in self.records])).to(torch.float64)

    def count_hoi_classes(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for record in self.records:
            for gt in record.instances:
                for action in gt.action_ids():
                    key = hoi_class_id(gt.object_class, action, self.header.n_act_classes)
                    counts[key] = counts.get(key, 0) + 1
        return counts

    def validate(self) -> None:
        self.header.validate()
        seen = set()
        shape = (3, self.header.image_h, self.header.image_w)
        for record in self.records:
            if record.image_id in seen:
                raise ValidationError(f"duplicate image id '{record.image_id}'")
            seen.add(record.image_id)
            for gt in record.instances:
                gt.validate(self.header.n_obj_classes, self.header.n_act_classes)
            if record.raster is not None and record.raster.shape != shape:
                raise ValidationError(
                    f"raster of '{record.image_id}' has shape {record.raster.shape}, expected {shape}")


def _dataset_paths(location: Union[str, Path]) -> Path:
    location = Path(location)
    return location if location.suffix == ".jsonl" else location / DATASET_FILENAME


def write_dataset(dataset: HoiDataset, location: Union[str, Path]) -> Path:
    """Write `dataset.jsonl` (and raster sidecars) into the directory `location`."""
    dataset.validate()
    path = _dataset_paths(location)
    image_dir = path.parent / IMAGES_DIRNAME
    lines = [dataset.header.to_dict()]
    for record in dataset.records:
        raster_path = None
        if record.raster is not None:
            image_dir.mkdir(parents=True, exist_ok=True)
            raster_path = f"{IMAGES_DIRNAME}/{record.image_id}.npy"
            np.save(path.parent / raster_path, np.ascontiguousarray(record.raster, dtype=np.float64))
        lines.append(record.to_dict(raster_path))
    write_jsonl(path, lines)
    logger.info(f"Wrote {len(dataset)} image records to {path}")
    return path


def read_dataset(location: Union[str, Path], load_rasters: bool = True) -> HoiDataset:
    path = _dataset_paths(location)
    lines = read_jsonl(path)
    lineno, header_data = lines[0]
    validate_record(header_data, DATASET_HEADER_SCHEMA, f"{path}:{lineno}")
    header = DatasetHeader.from_dict(header_data)

    records = []
    for lineno, data in lines[1:]:
        validate_record(data, IMAGE_RECORD_SCHEMA, f"{path}:{lineno}")
        raster = None
        if load_rasters and data.get("raster"):
            raster_file = path.parent / data["raster"]
            if not raster_file.is_file():
                raise ValidationError(f"{path}:{lineno}: raster file {raster_file} not found")
            raster = np.load(raster_file)
        records.append(ImageRecord(
            image_id=data["image_id"],
            instances=[GtInstance.from_dict(instance) for instance in data["instances"]],
            raster=raster,
            generator_seed=data.get("generator_seed"),
        ))
    dataset = HoiDataset(header, records)
    dataset.validate()
    logger.debug(f"Read {len(dataset)} image records from {path}")
    return dataset
