# -*- coding: utf-8 -*-
"""
Decoding

Turns each query into N_act scored detections. The object class and its
confidence come from the best real class; when no-pair wins the argmax this
is the second-highest entry overall. score = confidence * action probability.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from ..models.boxes import NormBox
from ..models.configs import EvalConfig
from ..models.hoi_instance import HoiDetection, PredictionsLike, as_prediction_set

logger = logging.getLogger(__name__)


def decode(preds: PredictionsLike, config: Optional[EvalConfig] = None) -> List[HoiDetection]:
    """One detection per (query, action) with score >= config.score_threshold."""
    config = config or EvalConfig()
    pred_set = as_prediction_set(preds).detach()
    object_probs = pred_set.object_probs.to(torch.float64).numpy()
    action_probs = pred_set.action_probs.to(torch.float64).numpy()
    human_boxes = pred_set.human_boxes.tolist()
    object_boxes = pred_set.object_boxes.tolist()

    real = object_probs[:, :-1]
    best_class = real.argmax(axis=1)
    confidence = real[np.arange(len(real)), best_class]
    scores = confidence[:, None] * action_probs

    detections = []
    for q in range(len(pred_set)):
        human = NormBox.from_sequence(human_boxes[q])
        obj = NormBox.from_sequence(object_boxes[q])
        for j in range(action_probs.shape[1]):
            score = float(scores[q, j])
            if score >= config.score_threshold:
                detections.append(HoiDetection(human, obj, int(best_class[q]) + 1, j + 1, score, q))
    return detections


def top_k_select(detections: Sequence[HoiDetection], k: int) -> List[HoiDetection]:
    """The k best detections by descending score, ties by (query, action) index."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return sorted(detections, key=HoiDetection.sort_key)[:k]


def decode_image(preds: PredictionsLike, config: Optional[EvalConfig] = None) -> List[HoiDetection]:
    config = config or EvalConfig()
    return top_k_select(decode(preds, config), config.top_k)


def detect(model, images: torch.Tensor, image_ids: Sequence[str],
           config: Optional[EvalConfig] = None) -> Dict[str, List[HoiDetection]]:
    """Run `model` (a HoiTransformer) and decode its final decoder layer per image."""
    config = config or EvalConfig()
    model.eval()
    results: Dict[str, List[HoiDetection]] = {}
    for image_id, image in zip(image_ids, images):
        final = model.predict(image)[0]
        results[image_id] = decode_image(final, config)
    logger.info(f"Decoded detections for {len(results)} images (top {config.top_k} each)")
    return results
