# -*- coding: utf-8 -*-
"""
Set-Prediction Losses

Box L1, GIoU, object-class cross entropy and action focal loss over the
Hungarian-matched pairs, their weighted total, and the auxiliary sum over
decoder layers. The tensor functions stay differentiable and feed the
trainer; the float wrappers are what the CLI and the tests read.

Probabilities are clamped inside each logarithm: log(max(p, clamp)) and
log(max(1 - p, clamp)).
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import torch

from .assignment import Assignment, HungarianMatcher
from .errors import NumericalError, ValidationError
from .geometry import elementwise_generalized_box_iou, elementwise_l1
from .models.configs import CostWeights, LossWeights
from .models.hoi_instance import (
    HoiTargets,
    PredictionSet,
    PredictionsLike,
    TargetsLike,
    as_prediction_set,
    as_targets,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossBreakdown:
    box: float
    giou: float
    obj_class: float
    action: float
    total: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "LossBreakdown":
        return cls(**{name: float(data[name]) for name in ("box", "giou", "obj_class", "action", "total")})


class LossTerms(NamedTuple):
    """The four unweighted loss components of one prediction set, as tensors."""
    box: torch.Tensor
    giou: torch.Tensor
    obj_class: torch.Tensor
    action: torch.Tensor

    def weighted(self, weights: LossWeights) -> torch.Tensor:
        return (weights.lambda_b * self.box + weights.lambda_u * self.giou
                + weights.lambda_c * self.obj_class + weights.lambda_a * self.action)

    def breakdown(self, weights: LossWeights) -> LossBreakdown:
        terms = LossTerms(*(term.detach() for term in self))
        return LossBreakdown(
            box=float(terms.box), giou=float(terms.giou), obj_class=float(terms.obj_class),
            action=float(terms.action), total=float(terms.weighted(weights)),
        )

    def check_finite(self, step: Optional[int] = None) -> None:
        for name, value in self._asdict().items():
            if not torch.isfinite(value).all():
                raise NumericalError(f"non-finite {name} loss", component=name, step=step)


def _matched_indices(assignment: Assignment) -> Tuple[torch.Tensor, torch.Tensor]:
    pairs = assignment.matched_pairs()
    gt_index = torch.as_tensor([gt for gt, _ in pairs], dtype=torch.long)
    pred_index = torch.as_tensor([pred for _, pred in pairs], dtype=torch.long)
    return gt_index, pred_index


def _check_sizes(targets: HoiTargets, preds: PredictionSet, assignment: Assignment) -> None:
    if assignment.n_queries != len(preds):
        raise ValidationError(f"assignment covers {assignment.n_queries} slots, predictions have {len(preds)}")
    if assignment.n_real != len(targets):
        raise ValidationError(f"assignment has {assignment.n_real} real slots, targets have {len(targets)}")


# --- tensor losses -----------------------------------------------------------

def box_loss_tensor(targets: HoiTargets, preds: PredictionSet, assignment: Assignment) -> torch.Tensor:
    if len(targets) == 0:
        return preds.human_boxes.new_zeros(())
    gt_index, pred_index = _matched_indices(assignment)
    human = elementwise_l1(targets.human_boxes[gt_index], preds.human_boxes[pred_index])
    obj = elementwise_l1(targets.object_boxes[gt_index], preds.object_boxes[pred_index])
    return (human + obj).sum() / len(targets)


def giou_loss_tensor(targets: HoiTargets, preds: PredictionSet, assignment: Assignment) -> torch.Tensor:
    if len(targets) == 0:
        return preds.human_boxes.new_zeros(())
    gt_index, pred_index = _matched_indices(assignment)
    human = elementwise_generalized_box_iou(targets.human_boxes[gt_index], preds.human_boxes[pred_index])
    obj = elementwise_generalized_box_iou(targets.object_boxes[gt_index], preds.object_boxes[pred_index])
    return (2 - human - obj).sum() / len(targets)


def class_loss_tensor(targets: HoiTargets, preds: PredictionSet, assignment: Assignment,
                      prob_clamp: float = 1e-7) -> torch.Tensor:
    """Mean negative log-likelihood over all queries; unmatched queries target no-pair."""
    target_classes = torch.full((len(preds),), preds.n_obj_classes, dtype=torch.long)
    gt_index, pred_index = _matched_indices(assignment)
    if len(gt_index):
        target_classes[pred_index] = targets.object_labels[gt_index]
    probs = preds.object_probs[torch.arange(len(preds)), target_classes]
    return -torch.log(probs.clamp(min=prob_clamp)).mean()


def focal_elementwise_tensor(targets: torch.Tensor, probs: torch.Tensor, gamma: float = 2.0,
                             prob_clamp: float = 1e-7) -> torch.Tensor:
    positive = targets * (1 - probs) ** gamma * -torch.log(probs.clamp(min=prob_clamp))
    negative = (1 - targets) * probs ** gamma * -torch.log((1 - probs).clamp(min=prob_clamp))
    return positive + negative


def action_loss_tensor(targets: HoiTargets, preds: PredictionSet, assignment: Assignment,
                       gamma: float = 2.0, prob_clamp: float = 1e-7) -> torch.Tensor:
    """Focal loss over every query and action, normalized by max(1, positive labels)."""
    target_actions = torch.zeros_like(preds.action_probs)
    gt_index, pred_index = _matched_indices(assignment)
    if len(gt_index):
        target_actions[pred_index] = targets.actions[gt_index].to(target_actions.dtype)
    focal = focal_elementwise_tensor(target_actions, preds.action_probs, gamma, prob_clamp)
    n_positive = max(1.0, float(targets.actions.sum()))
    return focal.sum() / n_positive


def loss_terms(targets: HoiTargets, preds: PredictionSet, assignment: Assignment,
               weights: Optional[LossWeights] = None) -> LossTerms:
    weights = weights or LossWeights()
    _check_sizes(targets, preds, assignment)
    return LossTerms(
        box=box_loss_tensor(targets, preds, assignment),
        giou=giou_loss_tensor(targets, preds, assignment),
        obj_class=class_loss_tensor(targets, preds, assignment, weights.prob_clamp),
        action=action_loss_tensor(targets, preds, assignment, weights.focal_gamma, weights.prob_clamp),
    )


class SetCriterion:
    """
    Matches each decoder layer's predictions independently and sums the
    weighted losses. Precomputed assignments may be passed in to hold the
    matching fixed, as the finite-difference check does.
    """

    def __init__(self, loss_weights: Optional[LossWeights] = None,
                 cost_weights: Optional[CostWeights] = None):
        self.loss_weights = loss_weights or LossWeights()
        self.matcher = HungarianMatcher(cost_weights or CostWeights())

    def match_layers(self, targets: HoiTargets, per_layer: Sequence[PredictionSet]) -> List[Assignment]:
        return [self.matcher.match(targets, preds) for preds in per_layer]

    def __call__(self, targets: HoiTargets, per_layer: Sequence[PredictionSet],
                 assignments: Optional[Sequence[Assignment]] = None,
                 step: Optional[int] = None) -> Tuple[torch.Tensor, List[LossTerms], List[Assignment]]:
        if not per_layer:
            raise ValidationError("at least one decoder layer of predictions is required")
        if assignments is None:
            assignments = self.match_layers(targets, per_layer)
        if len(assignments) != len(per_layer):
            raise ValidationError(f"{len(assignments)} assignments for {len(per_layer)} layers")

        terms = [loss_terms(targets, preds, assignment, self.loss_weights)
                 for preds, assignment in zip(per_layer, assignments)]
        for layer_terms in terms:
            layer_terms.check_finite(step)
        total = torch.stack([layer_terms.weighted(self.loss_weights) for layer_terms in terms]).sum()
        return total, terms, list(assignments)


# --- float API ---------------------------------------------------------------

def _prepare(gts: TargetsLike, preds: PredictionsLike) -> Tuple[HoiTargets, PredictionSet]:
    pred_set = as_prediction_set(preds).detach()
    return as_targets(gts, pred_set.n_act_classes), pred_set


def box_loss(gts: TargetsLike, preds: PredictionsLike, assignment: Assignment) -> float:
    return float(box_loss_tensor(*_prepare(gts, preds), assignment))


def giou_loss(gts: TargetsLike, preds: PredictionsLike, assignment: Assignment) -> float:
    return float(giou_loss_tensor(*_prepare(gts, preds), assignment))


def class_loss(gts: TargetsLike, preds: PredictionsLike, assignment: Assignment,
               prob_clamp: float = 1e-7) -> float:
    return float(class_loss_tensor(*_prepare(gts, preds), assignment, prob_clamp))


def focal_elementwise(target: int, p: float, gamma: float = 2.0, prob_clamp: float = 1e-7) -> float:
    if target not in (0, 1):
        raise ValidationError(f"focal target must be 0 or 1, got {target}")
    value = focal_elementwise_tensor(torch.tensor(float(target), dtype=torch.float64),
                                     torch.tensor(float(p), dtype=torch.float64), gamma, prob_clamp)
    return float(value)


def action_loss(gts: TargetsLike, preds: PredictionsLike, assignment: Assignment,
                gamma: float = 2.0, prob_clamp: float = 1e-7) -> float:
    return float(action_loss_tensor(*_prepare(gts, preds), assignment, gamma, prob_clamp))


def total_loss(gts: TargetsLike, preds: PredictionsLike, assignment: Assignment,
               weights: Optional[LossWeights] = None) -> LossBreakdown:
    weights = weights or LossWeights()
    targets, pred_set = _prepare(gts, preds)
    return loss_terms(targets, pred_set, assignment, weights).breakdown(weights)


def aux_total_loss(gts: TargetsLike, per_layer_preds: Sequence[PredictionsLike],
                   weights: Optional[LossWeights] = None,
                   cost_weights: Optional[CostWeights] = None) -> float:
    """Sum of the per-layer totals, each layer matched on its own."""
    per_layer = [as_prediction_set(preds).detach() for preds in per_layer_preds]
    if not per_layer:
        raise ValidationError("at least one decoder layer of predictions is required")
    targets = as_targets(gts, per_layer[0].n_act_classes)
    total, _, _ = SetCriterion(weights, cost_weights)(targets, per_layer)
    return float(total)
