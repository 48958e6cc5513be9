# -*- coding: utf-8 -*-
"""
V-COCO protocol: one AP per action class, object class ignored.

Scenario 1 requires a detection of an object-less interaction to carry the
all-zero object box; scenario 2 skips the object test for such ground truths.
Excluded actions keep their AP lines but leave the mAP.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

from ..models.configs import EvalConfig
from .average_precision import Protocol, average_precision, match_detections
from .hico import DetectionsByImage, GtsByImage, check_inputs
from .report import APEntry, EvalReport, mean_ap

logger = logging.getLogger(__name__)


def _scenario_entries(detections: DetectionsByImage, gts: GtsByImage, n_act_classes: int,
                      config: EvalConfig, scenario: int) -> List[APEntry]:
    protocol = Protocol.vcoco(scenario)
    labels: Dict[int, List[Tuple[float, bool]]] = defaultdict(list)
    positives: Dict[int, int] = defaultdict(int)
    for image_id in sorted(gts):
        instances = list(gts[image_id])
        dets = list(detections.get(image_id, []))
        for gt in instances:
            for action in gt.action_ids():
                positives[action] += 1
        for det, result in zip(dets, match_detections(dets, instances, config, protocol)):
            labels[det.action_class].append((det.score, result.is_tp))

    setting = f"scenario_{scenario}"
    excluded = set(config.vcoco_excluded_actions)
    return [
        APEntry(setting, "full", action, average_precision(labels.get(action, []), positives[action]),
                positives[action], len(labels.get(action, [])), excluded=action in excluded)
        for action in range(1, n_act_classes + 1)
    ]


def eval_vcoco(detections: DetectionsByImage, gts: GtsByImage, n_obj_classes: int, n_act_classes: int,
               config: Optional[EvalConfig] = None) -> EvalReport:
    config = config or EvalConfig()
    check_inputs(detections, gts, n_obj_classes, n_act_classes, allow_objectless=True)

    report = EvalReport(protocol="vcoco", metadata={
        "iou_threshold": config.iou_threshold,
        "primary_scenario": config.vcoco_scenario,
        "excluded_actions": sorted(config.vcoco_excluded_actions),
    })
    for scenario in (1, 2):
        entries = _scenario_entries(detections, gts, n_act_classes, config, scenario)
        report.entries.extend(entries)
        report.summary[f"scenario_{scenario}"] = {"full": mean_ap(entries)}
    logger.info(f"V-COCO mAP scenario_1={report.mean('scenario_1', 'full')} "
                f"scenario_2={report.mean('scenario_2', 'full')}")
    return report
