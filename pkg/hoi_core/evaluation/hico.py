# -*- coding: utf-8 -*-
"""
HICO-DET protocol: one AP per (object, action) class, under the default
setting (all test images) and the known-object setting (only images whose
ground truths contain the class's object), each split into rare and
non-rare classes by their training counts.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ..errors import ValidationError
from ..models.configs import EvalConfig
from ..models.hoi_instance import GtInstance, HoiDetection, hoi_class_id, split_hoi_class_id
from .average_precision import Protocol, average_precision, match_detections
from .report import APEntry, EvalReport, mean_ap

logger = logging.getLogger(__name__)

SETTINGS = ("default", "known_object")
SPLITS = ("full", "rare", "non_rare")

DetectionsByImage = Mapping[str, Sequence[HoiDetection]]
GtsByImage = Mapping[str, Sequence[GtInstance]]


def check_inputs(detections: DetectionsByImage, gts: GtsByImage, n_obj_classes: int, n_act_classes: int,
                 allow_objectless: bool) -> None:
    for image_id, instances in gts.items():
        for gt in instances:
            gt.validate(n_obj_classes, n_act_classes)
            if not gt.has_object and not allow_objectless:
                raise ValidationError(f"image '{image_id}': object-less ground truth under the HICO protocol")
    for image_id, dets in detections.items():
        for det in dets:
            if not 1 <= det.object_class <= n_obj_classes or not 1 <= det.action_class <= n_act_classes:
                raise ValidationError(f"image '{image_id}': detection class ({det.object_class}, "
                                      f"{det.action_class}) outside the vocabulary")
    unknown = sorted(set(detections) - set(gts))
    if unknown:
        logger.warning(f"Ignoring detections for {len(unknown)} images without ground truth")


def rare_split(hoi_class: int, hoi_counts: Mapping[int, int], rare_threshold: int) -> str:
    return "rare" if hoi_counts.get(hoi_class, 0) < rare_threshold else "non_rare"


def eval_hico(detections: DetectionsByImage, gts: GtsByImage, hoi_counts: Mapping[int, int],
              n_obj_classes: int, n_act_classes: int, config: Optional[EvalConfig] = None) -> EvalReport:
    config = config or EvalConfig()
    check_inputs(detections, gts, n_obj_classes, n_act_classes, allow_objectless=False)

    labels: Dict[int, List[Tuple[str, float, bool]]] = defaultdict(list)
    positives: Dict[int, Dict[str, int]] = defaultdict(lambda: defaultdict(int))
    image_objects: Dict[str, Set[int]] = {}

    for image_id in sorted(gts):
        instances = list(gts[image_id])
        dets = list(detections.get(image_id, []))
        image_objects[image_id] = {gt.object_class for gt in instances}
        for gt in instances:
            for action in gt.action_ids():
                positives[hoi_class_id(gt.object_class, action, n_act_classes)][image_id] += 1
        for det, result in zip(dets, match_detections(dets, instances, config, Protocol.HICO)):
            labels[hoi_class_id(det.object_class, det.action_class, n_act_classes)].append(
                (image_id, det.score, result.is_tp))

    report = EvalReport(protocol="hico", metadata={"iou_threshold": config.iou_threshold,
                                                   "rare_threshold": config.rare_threshold})
    for hoi_class in range(1, n_obj_classes * n_act_classes + 1):
        object_class, _ = split_hoi_class_id(hoi_class, n_act_classes)
        split = rare_split(hoi_class, hoi_counts, config.rare_threshold)
        n_pos = sum(positives[hoi_class].values())
        for setting in SETTINGS:
            pooled = labels.get(hoi_class, [])
            if setting == "known_object":
                pooled = [item for item in pooled if object_class in image_objects[item[0]]]
            ap = average_precision([(score, tp) for _, score, tp in pooled], n_pos)
            report.entries.append(APEntry(setting, split, hoi_class, ap, n_pos, len(pooled)))

    for setting in SETTINGS:
        report.summary[setting] = {
            "full": mean_ap(report.entries_for(setting)),
            "rare": mean_ap(report.entries_for(setting, "rare")),
            "non_rare": mean_ap(report.entries_for(setting, "non_rare")),
        }
    logger.info(f"HICO mAP default={report.mean('default', 'full')} known_object={report.mean('known_object', 'full')}")
    return report
