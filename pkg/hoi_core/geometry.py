# -*- coding: utf-8 -*-
"""
Box Geometry

Parametrization changes, L1 distance, IoU and generalized IoU. The tensor
kernels broadcast over leading dimensions and stay differentiable, so the
matcher, the losses and the evaluation code all share one implementation;
the NormBox functions are thin scalar wrappers around them.

Zero-area convention: IoU is 0 when the union is empty, and GIoU of two
identical degenerate boxes is 1. No epsilon is added to any divisor.
"""

from typing import Sequence, Tuple

import torch

from .models.boxes import NormBox

Corners = Tuple[float, float, float, float]


# --- tensor kernels ----------------------------------------------------------

def box_cxcywh_to_xyxy(boxes: torch.Tensor) -> torch.Tensor:
    cx, cy, w, h = boxes.unbind(-1)
    return torch.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], dim=-1)


def box_xyxy_to_cxcywh(boxes: torch.Tensor) -> torch.Tensor:
    x1, y1, x2, y2 = boxes.unbind(-1)
    return torch.stack([(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1], dim=-1)


def box_area(corners: torch.Tensor) -> torch.Tensor:
    return (corners[..., 2] - corners[..., 0]) * (corners[..., 3] - corners[..., 1])


def _safe_ratio(numerator: torch.Tensor, denominator: torch.Tensor, fallback: torch.Tensor) -> torch.Tensor:
    # the masked-out branch must not produce NaN gradients either
    positive = denominator > 0
    safe = torch.where(positive, denominator, torch.ones_like(denominator))
    return torch.where(positive, numerator / safe, fallback)


def elementwise_box_iou(boxes_a: torch.Tensor, boxes_b: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """IoU and union of center-size boxes, broadcast over leading dimensions."""
    a = box_cxcywh_to_xyxy(boxes_a)
    b = box_cxcywh_to_xyxy(boxes_b)
    lt = torch.maximum(a[..., :2], b[..., :2])
    rb = torch.minimum(a[..., 2:], b[..., 2:])
    wh = (rb - lt).clamp(min=0)
    inter = wh[..., 0] * wh[..., 1]
    union = box_area(a) + box_area(b) - inter
    iou = _safe_ratio(inter, union, torch.zeros_like(union))
    return iou, union


def elementwise_generalized_box_iou(boxes_a: torch.Tensor, boxes_b: torch.Tensor) -> torch.Tensor:
    """Generalized IoU of center-size boxes, broadcast over leading dimensions."""
    iou, union = elementwise_box_iou(boxes_a, boxes_b)
    a = box_cxcywh_to_xyxy(boxes_a)
    b = box_cxcywh_to_xyxy(boxes_b)
    lt = torch.minimum(a[..., :2], b[..., :2])
    rb = torch.maximum(a[..., 2:], b[..., 2:])
    wh = (rb - lt).clamp(min=0)
    hull = wh[..., 0] * wh[..., 1]

    identical = (boxes_a == boxes_b).all(dim=-1)
    giou = iou - _safe_ratio(hull - union, hull, torch.zeros_like(hull))
    return torch.where(identical & (hull <= 0), torch.ones_like(giou), giou)


def pairwise_generalized_box_iou(boxes_a: torch.Tensor, boxes_b: torch.Tensor) -> torch.Tensor:
    """[N, 4] x [M, 4] -> [N, M] generalized IoU matrix."""
    return elementwise_generalized_box_iou(boxes_a[:, None, :], boxes_b[None, :, :])


def elementwise_l1(boxes_a: torch.Tensor, boxes_b: torch.Tensor) -> torch.Tensor:
    return (boxes_a - boxes_b).abs().sum(dim=-1)


def box_centers_distance(boxes_a: torch.Tensor, boxes_b: torch.Tensor) -> torch.Tensor:
    return torch.linalg.vector_norm(boxes_a[..., :2] - boxes_b[..., :2], dim=-1)


# --- NormBox operations ------------------------------------------------------

def to_corners(box: NormBox) -> Corners:
    return (box.cx - box.w / 2, box.cy - box.h / 2, box.cx + box.w / 2, box.cy + box.h / 2)


def from_corners(corners: Sequence[float]) -> NormBox:
    x1, y1, x2, y2 = (float(v) for v in corners)
    if x2 < x1 or y2 < y1:
        raise ValueError(f"corners {tuple(corners)} are not ordered (x1 <= x2, y1 <= y2)")
    return NormBox.from_sequence(box_xyxy_to_cxcywh(torch.tensor([x1, y1, x2, y2], dtype=torch.float64)).tolist())


def l1(box_a: NormBox, box_b: NormBox) -> float:
    """Sum of absolute differences in the center-size parametrization."""
    return sum(abs(a - b) for a, b in zip(box_a.to_list(), box_b.to_list()))


def iou(box_a: NormBox, box_b: NormBox) -> float:
    value, _ = elementwise_box_iou(box_a.as_tensor(), box_b.as_tensor())
    return float(value)


def giou(box_a: NormBox, box_b: NormBox) -> float:
    return float(elementwise_generalized_box_iou(box_a.as_tensor(), box_b.as_tensor()))


def area(box: NormBox) -> float:
    return box.w * box.h


def center_distance(box_a: NormBox, box_b: NormBox) -> float:
    return float(box_centers_distance(box_a.as_tensor(), box_b.as_tensor()))
