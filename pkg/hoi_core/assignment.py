# -*- coding: utf-8 -*-
"""
Bipartite Assignment

Builds the N_q x N_q matching-cost matrix between the padded ground-truth set
and the predictions, and solves it with an O(n^3) Hungarian algorithm.

Rows are ground-truth slots (real instances first, then the padding slots),
columns are predictions. Padding rows cost exactly 0 everywhere.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import torch

from .errors import ValidationError
from .geometry import elementwise_generalized_box_iou, elementwise_l1
from .models.configs import CostWeights
from .models.hoi_instance import (
    GtInstance,
    HoiTargets,
    Prediction,
    PredictionSet,
    PredictionsLike,
    TargetsLike,
    as_prediction_set,
    as_targets,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Assignment:
    """The optimal permutation (ground-truth slot -> prediction index) and the padding slots."""
    permutation: Tuple[int, ...]
    padded_set: FrozenSet[int]

    @property
    def n_queries(self) -> int:
        return len(self.permutation)

    @property
    def n_real(self) -> int:
        return len(self.permutation) - len(self.padded_set)

    def matched_pairs(self) -> List[Tuple[int, int]]:
        """(ground-truth index, prediction index) for every real ground truth."""
        return [(slot, pred) for slot, pred in enumerate(self.permutation) if slot not in self.padded_set]

    def to_dict(self) -> Dict[str, Any]:
        return {"permutation": list(self.permutation), "padded_set": sorted(self.padded_set)}


# --- cost matrices -----------------------------------------------------------

def box_cost_matrix(targets: HoiTargets, preds: PredictionSet) -> torch.Tensor:
    """H^(b): the larger of the human-box and object-box L1 distances, [G, N_q]."""
    human = elementwise_l1(targets.human_boxes[:, None, :], preds.human_boxes[None, :, :])
    obj = elementwise_l1(targets.object_boxes[:, None, :], preds.object_boxes[None, :, :])
    return torch.maximum(human, obj)


def giou_cost_matrix(targets: HoiTargets, preds: PredictionSet) -> torch.Tensor:
    """H^(u): the larger of the two negated GIoUs, [G, N_q]."""
    human = elementwise_generalized_box_iou(targets.human_boxes[:, None, :], preds.human_boxes[None, :, :])
    obj = elementwise_generalized_box_iou(targets.object_boxes[:, None, :], preds.object_boxes[None, :, :])
    return torch.maximum(-human, -obj)


def object_class_cost_matrix(targets: HoiTargets, preds: PredictionSet) -> torch.Tensor:
    """H^(c): minus the predicted probability of the ground-truth class, [G, N_q]."""
    return -preds.object_probs[:, targets.object_labels].T


def action_class_cost_matrix(targets: HoiTargets, preds: PredictionSet, epsilon: float) -> torch.Tensor:
    """H^(a): balanced average of positive and negative action agreement, [G, N_q]."""
    actions = targets.actions
    probs = preds.action_probs
    positive = actions @ probs.T / (actions.sum(dim=1, keepdim=True) + epsilon)
    negative = (1 - actions) @ (1 - probs).T / ((1 - actions).sum(dim=1, keepdim=True) + epsilon)
    return -0.5 * (positive + negative)


def _single(gt: GtInstance, pred: Prediction) -> Tuple[HoiTargets, PredictionSet]:
    preds = PredictionSet.from_predictions([pred])
    return HoiTargets.from_instances([gt], preds.n_act_classes), preds


def pair_box_cost(gt: GtInstance, pred: Prediction) -> float:
    return float(box_cost_matrix(*_single(gt, pred))[0, 0])


def pair_giou_cost(gt: GtInstance, pred: Prediction) -> float:
    return float(giou_cost_matrix(*_single(gt, pred))[0, 0])


def object_class_cost(gt: GtInstance, pred: Prediction) -> float:
    return float(object_class_cost_matrix(*_single(gt, pred))[0, 0])


def action_class_cost(gt: GtInstance, pred: Prediction, epsilon: float = 1e-4) -> float:
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    return float(action_class_cost_matrix(*_single(gt, pred), epsilon)[0, 0])


@torch.no_grad()
def build_cost_matrix(gts: TargetsLike, preds: PredictionsLike,
                      weights: Optional[CostWeights] = None) -> np.ndarray:
    """The full N_q x N_q matrix; rows beyond the real ground truths are zero."""
    weights = weights or CostWeights()
    pred_set = as_prediction_set(preds).detach()
    targets = as_targets(gts, pred_set.n_act_classes)
    n_queries = len(pred_set)
    n_real = len(targets)
    if n_real > n_queries:
        raise ValidationError(f"{n_real} ground truths cannot be matched to {n_queries} queries")

    cost = np.zeros((n_queries, n_queries), dtype=np.float64)
    if n_real == 0:
        return cost

    real_rows = (
        weights.eta_b * box_cost_matrix(targets, pred_set)
        + weights.eta_u * giou_cost_matrix(targets, pred_set)
        + weights.eta_c * object_class_cost_matrix(targets, pred_set)
        + weights.eta_a * action_class_cost_matrix(targets, pred_set, weights.epsilon)
    )
    cost[:n_real] = real_rows.to(torch.float64).numpy()
    return cost


# --- solver ------------------------------------------------------------------

def hungarian(cost: np.ndarray) -> np.ndarray:
    """
    Minimum-cost perfect assignment of a square matrix with row/column potentials.

    Returns `assignment` with assignment[row] = column. Among several optimal
    assignments the lexicographically smallest one (by row order) is returned.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValidationError(f"cost matrix must be square, got shape {cost.shape}")
    if np.isnan(cost).any():
        raise ValidationError("cost matrix contains NaN")
    if not np.isfinite(cost).all():
        raise ValidationError("cost matrix contains infinite entries")

    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)

    # 1-indexed; column 0 is the virtual start of each augmenting path
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            reduced = np.empty(n + 1)
            reduced[0] = np.inf
            reduced[1:] = cost[i0 - 1] - u[i0] - v[1:]

            improve = free & (reduced < minv)
            minv[improve] = reduced[improve]
            way[improve] = j0

            candidates = np.where(free, minv, np.inf)
            j1 = int(np.argmin(candidates))
            delta = candidates[j1]

            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta

            j0 = j1
            if p[j0] == 0:
                break

        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assignment = np.empty(n, dtype=np.int64)
    assignment[p[1:] - 1] = np.arange(n)

    # every optimal assignment lives on the zero-reduced-cost edges of an optimal dual
    tolerance = 1e-9 * max(1.0, float(np.abs(cost).max()))
    tight = np.abs(cost - u[1:, None] - v[None, 1:]) <= tolerance
    tight[np.arange(n), assignment] = True
    return _lexicographic_smallest(tight, assignment)


def _lexicographic_smallest(tight: np.ndarray, assignment: np.ndarray) -> np.ndarray:
    """
    Rewrite a perfect matching of the `tight` graph into the lexicographically
    smallest one, fixing rows in order. For each row a single backward search
    from its current column finds every column it can take over while the
    unfixed rows re-route along tight edges.
    """
    n = len(assignment)
    match = assignment.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[match] = np.arange(n)
    fixed = np.zeros(n, dtype=bool)

    for row in range(n):
        current = int(match[row])
        fixed[row] = True
        # reachable[c] = the column the owner of c moves to when `row` takes c
        reachable = {current: -1}
        queue = [current]
        while queue:
            target = queue.pop()
            for other in np.flatnonzero(tight[:, target] & ~fixed):
                column = int(match[other])
                if column not in reachable:
                    reachable[column] = target
                    queue.append(column)

        best = min(c for c in reachable if tight[row, c])
        if best == current:
            continue
        column = best
        moves = []
        while column != current:
            moves.append((int(owner[column]), reachable[column]))
            column = reachable[column]
        match[row] = best
        owner[best] = row
        for other, new_column in moves:
            match[other] = new_column
            owner[new_column] = other
    return match


def assignment_cost(cost: np.ndarray, permutation: np.ndarray) -> float:
    rows = np.arange(len(permutation))
    return float(cost[rows, permutation].sum())


class HungarianMatcher:
    """
    Matches one image's padded ground-truth set to the N_q predictions.

    Padding rows are interchangeable (all costs 0); the lexicographic rule
    of `hungarian` hands them the leftover prediction indices in ascending order.
    """

    def __init__(self, weights: Optional[CostWeights] = None):
        self.weights = weights or CostWeights()

    def match(self, gts: TargetsLike, preds: PredictionsLike) -> Assignment:
        pred_set = as_prediction_set(preds)
        targets = as_targets(gts, pred_set.n_act_classes)
        cost = build_cost_matrix(targets, pred_set, self.weights)
        permutation = hungarian(cost)

        n_real = len(targets)
        padded = frozenset(range(n_real, len(pred_set)))
        logger.debug(f"Matched {n_real} ground truths, total cost {assignment_cost(cost, permutation):.6f}")
        return Assignment(tuple(int(j) for j in permutation), padded)


def match(gts: TargetsLike, preds: PredictionsLike, weights: Optional[CostWeights] = None) -> Assignment:
    return HungarianMatcher(weights).match(gts, preds)
