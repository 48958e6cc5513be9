# -*- coding: utf-8 -*-
"""
Detection Matching and Average Precision

Greedy score-ordered matching of one image's detections against its
ground-truth (instance, action) triplets, and all-points interpolated AP.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError
from ..geometry import iou
from ..models.configs import EvalConfig
from ..models.hoi_instance import GtInstance, HoiDetection


class Protocol(str, Enum):
    HICO = "hico"
    VCOCO_SCENARIO_1 = "vcoco_1"
    VCOCO_SCENARIO_2 = "vcoco_2"

    @classmethod
    def vcoco(cls, scenario: int) -> "Protocol":
        return cls.VCOCO_SCENARIO_1 if scenario == 1 else cls.VCOCO_SCENARIO_2


@dataclass(frozen=True)
class MatchResult:
    """The TP/FP label of one detection and, for a TP, the ground truth it consumed."""
    is_tp: bool
    gt_index: Optional[int] = None


def _object_test(det: HoiDetection, gt: GtInstance, threshold: float, protocol: Protocol) -> Tuple[bool, float]:
    if not gt.has_object:
        if protocol is Protocol.HICO:
            raise ValidationError("object-less ground truths are not part of the HICO protocol")
        if protocol is Protocol.VCOCO_SCENARIO_2:
            return True, 1.0
        return det.object_box.is_empty(), 1.0
    overlap = iou(det.object_box, gt.object_box)
    return overlap > threshold, overlap


def match_detections(detections: Sequence[HoiDetection], gts: Sequence[GtInstance],
                     config: Optional[EvalConfig] = None,
                     protocol: Protocol = Protocol.HICO) -> List[MatchResult]:
    """
    Labels aligned with `detections`. Detections are processed by descending
    score (stable); each (ground truth, action) triplet is consumed at most
    once. Among qualifying triplets the one with the largest min(human IoU,
    object IoU) wins, ties by ground-truth index.
    """
    config = config or EvalConfig()
    threshold = config.iou_threshold
    consumed = set()
    results: List[Optional[MatchResult]] = [None] * len(detections)
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)

    for i in order:
        det = detections[i]
        best_gt, best_overlap = None, -1.0
        for g, gt in enumerate(gts):
            if (g, det.action_class) in consumed:
                continue
            if det.action_class not in gt.action_ids():
                continue
            if protocol is Protocol.HICO and det.object_class != gt.object_class:
                continue
            human_overlap = iou(det.human_box, gt.human_box)
            if not human_overlap > threshold:
                continue
            passed, object_overlap = _object_test(det, gt, threshold, protocol)
            if not passed:
                continue
            overlap = min(human_overlap, object_overlap)
            if overlap > best_overlap:
                best_gt, best_overlap = g, overlap
        if best_gt is None:
            results[i] = MatchResult(False)
        else:
            consumed.add((best_gt, det.action_class))
            results[i] = MatchResult(True, best_gt)
    return results


def average_precision(labels: Sequence[Tuple[float, bool]], n_positives: int) -> float:
    """
    All-points interpolated AP of (score, is_tp) pairs. Pairs are ranked by
    descending score, stable in input order. 0 when there are no positives.
    """
    if n_positives < 0:
        raise ValidationError(f"n_positives must be non-negative, got {n_positives}")
    if n_positives == 0 or not labels:
        return 0.0
    order = sorted(range(len(labels)), key=lambda i: -labels[i][0])
    tp = np.array([1.0 if labels[i][1] else 0.0 for i in order])
    fp = 1.0 - tp
    tp = np.cumsum(tp)
    fp = np.cumsum(fp)
    recall = tp / n_positives
    precision = tp / (tp + fp)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changes = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changes + 1] - mrec[changes]) * mpre[changes + 1]))
