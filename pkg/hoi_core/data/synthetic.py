# -*- coding: utf-8 -*-
"""
Synthetic HOI Scenes

Images of colored rectangles: a "human" rectangle paired with an "object"
rectangle whose color encodes its class. The three actions are spatial
relations computed from the two boxes alone:

  - overlapping:     the boxes share positive area;
  - adjacent:        not overlapping, edge gap <= adjacency_gap;
  - distant_aligned: edge gap > adjacency_gap and vertical centers within
                     align_tolerance.

Generation samples a target relation, builds a geometry for it, then
recomputes the labels from the boxes so they always follow the rules.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ValidationError
from ..geometry import to_corners
from ..models.boxes import NormBox
from ..models.configs import SYNTH_ACTION_NAMES, SynthConfig
from ..models.hoi_instance import GtInstance
from .dataset_file import DatasetHeader, HoiDataset, ImageRecord

logger = logging.getLogger(__name__)

HUMAN_COLOR = (1.0, 1.0, 1.0)
_MAX_ATTEMPTS = 1000


def object_color(object_class: int, n_obj_classes: int) -> Tuple[float, float, float]:
    """Evenly spaced hues, one per object class."""
    hue = (object_class - 1) / max(1, n_obj_classes)
    channels = [max(0.0, 1.0 - abs(((hue * 3.0 - shift) % 3.0) - 1.0)) for shift in (0.0, 1.0, 2.0)]
    return tuple(0.2 + 0.6 * c for c in channels)


def edge_gap(box_a: NormBox, box_b: NormBox) -> float:
    """Largest axis-aligned separation between the two rectangles (0 when they touch or overlap)."""
    ax1, ay1, ax2, ay2 = to_corners(box_a)
    bx1, by1, bx2, by2 = to_corners(box_b)
    gap_x = max(0.0, bx1 - ax2, ax1 - bx2)
    gap_y = max(0.0, by1 - ay2, ay1 - by2)
    return max(gap_x, gap_y)


def intersection_area(box_a: NormBox, box_b: NormBox) -> float:
    ax1, ay1, ax2, ay2 = to_corners(box_a)
    bx1, by1, bx2, by2 = to_corners(box_b)
    return max(0.0, min(ax2, bx2) - max(ax1, bx1)) * max(0.0, min(ay2, by2) - max(ay1, by1))


def relation_labels(human: NormBox, obj: NormBox, config: SynthConfig) -> Tuple[int, int, int]:
    """(overlapping, adjacent, distant_aligned) as 0/1 flags."""
    overlapping = intersection_area(human, obj) > 0
    gap = edge_gap(human, obj)
    adjacent = not overlapping and gap <= config.adjacency_gap
    aligned = gap > config.adjacency_gap and abs(human.cy - obj.cy) <= config.align_tolerance
    return int(overlapping), int(adjacent), int(aligned)


def _box_from_corners(x1: float, y1: float, x2: float, y2: float) -> Optional[NormBox]:
    if x1 < 0 or y1 < 0 or x2 > 1 or y2 > 1:
        return None
    return NormBox((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def _sample_pair(rng: np.random.Generator, relation: int, config: SynthConfig) -> Optional[Tuple[NormBox, NormBox]]:
    hw, hh, ow, oh = (float(v) for v in rng.uniform(config.min_box_size, config.max_box_size, size=4))
    hx1 = float(rng.uniform(0.0, 1.0 - hw))
    hy1 = float(rng.uniform(0.0, 1.0 - hh))
    human = _box_from_corners(hx1, hy1, hx1 + hw, hy1 + hh)
    if human is None:
        return None
    side = 1.0 if rng.random() < 0.5 else -1.0

    if relation == 0:
        dx = float(rng.uniform(-0.8, 0.8)) * (hw + ow) / 2
        dy = float(rng.uniform(-0.8, 0.8)) * (hh + oh) / 2
        ocx, ocy = human.cx + dx, human.cy + dy
    elif relation == 1:
        gap = float(rng.uniform(0.0, 0.75 * config.adjacency_gap))
        ocx = human.cx + side * ((hw + ow) / 2 + gap)
        ocy = human.cy + float(rng.uniform(-0.4, 0.4)) * (hh + oh) / 2
    else:
        gap = float(rng.uniform(1.5 * config.adjacency_gap, 1.0))
        ocx = human.cx + side * ((hw + ow) / 2 + gap)
        ocy = human.cy + float(rng.uniform(-0.5, 0.5)) * config.align_tolerance

    obj = _box_from_corners(ocx - ow / 2, ocy - oh / 2, ocx + ow / 2, ocy + oh / 2)
    if obj is None:
        return None
    return human, obj


def sample_instance(rng: np.random.Generator, config: SynthConfig) -> GtInstance:
    for _ in range(_MAX_ATTEMPTS):
        relation = int(rng.integers(len(SYNTH_ACTION_NAMES)))
        object_class = int(rng.integers(1, config.n_obj_classes + 1))
        pair = _sample_pair(rng, relation, config)
        if pair is None:
            continue
        human, obj = pair
        actions = relation_labels(human, obj, config)
        if any(actions):
            return GtInstance(human, obj, object_class, actions)
    raise ValidationError("could not sample a labelled instance; check the synthetic box-size settings")


def render(instances: List[GtInstance], config: SynthConfig) -> np.ndarray:
    """(3, H, W) float64 raster; each rectangle adds its color, clipped to [0, 1]."""
    raster = np.zeros((3, config.image_h, config.image_w), dtype=np.float64)

    def paint(box: NormBox, color: Tuple[float, float, float]) -> None:
        x1, y1, x2, y2 = to_corners(box)
        c1, c2 = int(np.floor(x1 * config.image_w)), int(np.ceil(x2 * config.image_w))
        r1, r2 = int(np.floor(y1 * config.image_h)), int(np.ceil(y2 * config.image_h))
        raster[:, r1:r2, c1:c2] += np.asarray(color)[:, None, None] * 0.5

    for gt in instances:
        paint(gt.human_box, HUMAN_COLOR)
        paint(gt.object_box, object_color(gt.object_class, config.n_obj_classes))
    return np.clip(raster, 0.0, 1.0)


def generate_synthetic(config: SynthConfig, with_rasters: bool = True) -> HoiDataset:
    """Deterministic given `config.seed`; image ids are synth_0000, synth_0001, ..."""
    rng = np.random.default_rng(config.seed)
    records = []
    for index in range(config.n_images):
        image_seed = int(rng.integers(0, 2 ** 31 - 1))
        image_rng = np.random.default_rng(image_seed)
        n_instances = int(image_rng.integers(config.min_instances, config.max_instances + 1))
        instances = [sample_instance(image_rng, config) for _ in range(n_instances)]
        raster = render(instances, config) if with_rasters else None
        records.append(ImageRecord(f"synth_{index:04d}", instances, raster, image_seed))

    header = DatasetHeader(
        n_obj_classes=config.n_obj_classes,
        n_act_classes=config.n_act_classes,
        object_names=[f"object_{k}" for k in range(1, config.n_obj_classes + 1)],
        action_names=list(SYNTH_ACTION_NAMES),
        hoi_counts={},
        image_h=config.image_h,
        image_w=config.image_w,
    )
    dataset = HoiDataset(header, records)
    header.hoi_counts = dataset.count_hoi_classes()
    logger.info(f"Generated {len(records)} synthetic images "
                f"({sum(len(r.instances) for r in records)} instances, seed {config.seed})")
    return dataset
