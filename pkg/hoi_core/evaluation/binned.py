# -*- coding: utf-8 -*-
"""
Binned AP Analysis

Pools HICO-protocol matches of all classes into bins of a spatial quantity:
the distance between the human and object centers, or the larger of the two
box areas (both in normalized coordinates). A ground-truth pair lands in the
bin of its own geometry and adds one positive per labeled action; a true
positive goes to the bin of the ground truth it matched, a false positive to
the bin of its predicted geometry. Bin i covers [i * width, (i + 1) * width).
Sparse bins are dropped by counting pairs, not positives.
"""

import logging
import math
from collections import defaultdict
from enum import Enum
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..geometry import area, center_distance
from ..models.boxes import NormBox
from ..models.configs import EvalConfig
from .average_precision import Protocol, average_precision, match_detections
from .hico import DetectionsByImage, GtsByImage, check_inputs

logger = logging.getLogger(__name__)

# absorbs representation error such as 0.3 / 0.1 == 2.9999999999999996
_BIN_EPS = 1e-9

BIN_COLUMNS = ["bin_index", "bin_start", "bin_end", "n_instances", "n_positives", "n_detections", "ap"]


class BinMode(str, Enum):
    DISTANCE = "distance"
    AREA = "area"


def pair_value(human: NormBox, obj: NormBox, mode: BinMode) -> float:
    if BinMode(mode) is BinMode.DISTANCE:
        return center_distance(human, obj)
    return max(area(human), area(obj))


def bin_index(value: float, bin_width: float) -> int:
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    return int(math.floor(value / bin_width + _BIN_EPS))


def binned_ap_analysis(detections: DetectionsByImage, gts: GtsByImage, n_obj_classes: int, n_act_classes: int,
                       mode: BinMode = BinMode.DISTANCE, config: Optional[EvalConfig] = None,
                       bin_width: Optional[float] = None) -> pd.DataFrame:
    """
    One row per bin with at least `config.min_bin_instances` ground-truth pairs,
    sorted by bin index, with columns BIN_COLUMNS.
    """
    config = config or EvalConfig()
    width = config.bin_width if bin_width is None else bin_width
    mode = BinMode(mode)
    check_inputs(detections, gts, n_obj_classes, n_act_classes, allow_objectless=False)

    labels: Dict[int, List[Tuple[float, bool]]] = defaultdict(list)
    positives: Dict[int, int] = defaultdict(int)
    instance_counts: Dict[int, int] = defaultdict(int)
    for image_id in sorted(gts):
        instances = list(gts[image_id])
        gt_bins = [bin_index(pair_value(gt.human_box, gt.object_box, mode), width) for gt in instances]
        for gt, gt_bin in zip(instances, gt_bins):
            instance_counts[gt_bin] += 1
            positives[gt_bin] += len(gt.action_ids())

        dets = list(detections.get(image_id, []))
        for det, result in zip(dets, match_detections(dets, instances, config, Protocol.HICO)):
            if result.is_tp:
                det_bin = gt_bins[result.gt_index]
            else:
                det_bin = bin_index(pair_value(det.human_box, det.object_box, mode), width)
            labels[det_bin].append((det.score, result.is_tp))

    rows = []
    for index in sorted(set(positives) | set(labels)):
        n_pos = positives.get(index, 0)
        n_instances = instance_counts.get(index, 0)
        if n_instances < config.min_bin_instances or n_pos == 0:
            continue
        rows.append({
            "bin_index": index,
            "bin_start": index * width,
            "bin_end": (index + 1) * width,
            "n_instances": n_instances,
            "n_positives": n_pos,
            "n_detections": len(labels.get(index, [])),
            "ap": average_precision(labels.get(index, []), n_pos),
        })
    logger.info(f"Binned analysis ({mode.value}, width {width}): {len(rows)} bins kept")
    return pd.DataFrame(rows, columns=BIN_COLUMNS)
