# -*- coding: utf-8 -*-
"""
HOI Instance Models

Record types for ground truths, per-query predictions and decoded detections,
plus the tensor containers the matcher, the losses and the network exchange.

Class indices in records are 1-based. The no-pair class is N_obj + 1, which
is the last column (0-based N_obj) of an object-probability tensor.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import torch

from ..errors import ValidationError
from .boxes import NormBox

PROBABILITY_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GtInstance:
    """
    One ground-truth human-object pair.

    `actions` is a multi-hot vector of length N_act. `has_object` is False for
    object-less interactions, whose object box is the all-zero sentinel.
    """
    human_box: NormBox
    object_box: NormBox
    object_class: int
    actions: Tuple[int, ...]
    has_object: bool = True

    def action_ids(self) -> List[int]:
        """1-based indices of the positive actions."""
        return [index + 1 for index, flag in enumerate(self.actions) if flag]

    def validate(self, n_obj_classes: int, n_act_classes: int) -> None:
        if not 1 <= self.object_class <= n_obj_classes:
            raise ValidationError(f"object class {self.object_class} outside [1, {n_obj_classes}]")
        if len(self.actions) != n_act_classes:
            raise ValidationError(f"action vector has length {len(self.actions)}, expected {n_act_classes}")
        if any(flag not in (0, 1) for flag in self.actions):
            raise ValidationError("action vector must be binary")
        if not any(self.actions):
            raise ValidationError("a ground-truth instance needs at least one positive action")
        for name, box in (("human", self.human_box), ("object", self.object_box)):
            if not box.in_unit_range():
                raise ValidationError(f"{name} box {box.to_list()} outside [0, 1]")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "human_box": self.human_box.to_list(),
            "object_box": self.object_box.to_list(),
            "object_class": self.object_class,
            "actions": list(self.actions),
            "has_object": self.has_object,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GtInstance":
        return cls(
            human_box=NormBox.from_sequence(data["human_box"]),
            object_box=NormBox.from_sequence(data["object_box"]),
            object_class=int(data["object_class"]),
            actions=tuple(int(flag) for flag in data["actions"]),
            has_object=bool(data.get("has_object", True)),
        )


@dataclass(frozen=True)
class Prediction:
    """One query's outputs: two boxes, N_obj + 1 class probabilities, N_act action probabilities."""
    human_box: NormBox
    object_box: NormBox
    object_probs: Tuple[float, ...]
    action_probs: Tuple[float, ...]

    @property
    def n_obj_classes(self) -> int:
        return len(self.object_probs) - 1

    def validate(self) -> None:
        if any(not 0.0 <= p <= 1.0 for p in self.object_probs):
            raise ValidationError("object probabilities must lie in [0, 1]")
        if abs(sum(self.object_probs) - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ValidationError(f"object probabilities sum to {sum(self.object_probs)}, not 1")
        if any(not 0.0 <= p <= 1.0 for p in self.action_probs):
            raise ValidationError("action probabilities must lie in [0, 1]")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "human_box": self.human_box.to_list(),
            "object_box": self.object_box.to_list(),
            "object_probs": list(self.object_probs),
            "action_probs": list(self.action_probs),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Prediction":
        return cls(
            human_box=NormBox.from_sequence(data["human_box"]),
            object_box=NormBox.from_sequence(data["object_box"]),
            object_probs=tuple(float(p) for p in data["object_probs"]),
            action_probs=tuple(float(p) for p in data["action_probs"]),
        )


@dataclass(frozen=True)
class HoiDetection:
    """A decoded <human box, object box, object class, action class, score> tuple."""
    human_box: NormBox
    object_box: NormBox
    object_class: int
    action_class: int
    score: float
    query_index: int = 0

    def sort_key(self) -> Tuple[float, int, int]:
        """Descending score, then query index, then action index."""
        return (-self.score, self.query_index, self.action_class)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "human_box": self.human_box.to_list(),
            "object_box": self.object_box.to_list(),
            "object_class": self.object_class,
            "action_class": self.action_class,
            "score": self.score,
            "query_index": self.query_index,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HoiDetection":
        return cls(
            human_box=NormBox.from_sequence(data["human_box"]),
            object_box=NormBox.from_sequence(data["object_box"]),
            object_class=int(data["object_class"]),
            action_class=int(data["action_class"]),
            score=float(data["score"]),
            query_index=int(data.get("query_index", 0)),
        )


# --- tensor containers -------------------------------------------------------

@dataclass
class HoiTargets:
    """Ground truths of one image as tensors; labels are 0-based."""
    human_boxes: torch.Tensor
    object_boxes: torch.Tensor
    object_labels: torch.Tensor
    actions: torch.Tensor

    def __len__(self) -> int:
        return int(self.human_boxes.shape[0])

    @classmethod
    def from_instances(cls, instances: Sequence[GtInstance], n_act_classes: int,
                       dtype: torch.dtype = torch.float64) -> "HoiTargets":
        if not instances:
            return cls(
                human_boxes=torch.zeros((0, 4), dtype=dtype),
                object_boxes=torch.zeros((0, 4), dtype=dtype),
                object_labels=torch.zeros((0,), dtype=torch.long),
                actions=torch.zeros((0, n_act_classes), dtype=dtype),
            )
        return cls(
            human_boxes=torch.tensor([gt.human_box.to_list() for gt in instances], dtype=dtype),
            object_boxes=torch.tensor([gt.object_box.to_list() for gt in instances], dtype=dtype),
            object_labels=torch.tensor([gt.object_class - 1 for gt in instances], dtype=torch.long),
            actions=torch.tensor([list(gt.actions) for gt in instances], dtype=dtype),
        )

    def permute(self, order: Sequence[int]) -> "HoiTargets":
        index = torch.as_tensor(list(order), dtype=torch.long)
        return HoiTargets(self.human_boxes[index], self.object_boxes[index],
                          self.object_labels[index], self.actions[index])


@dataclass
class PredictionSet:
    """The N_q predictions of one decoder layer for one image."""
    human_boxes: torch.Tensor
    object_boxes: torch.Tensor
    object_probs: torch.Tensor
    action_probs: torch.Tensor

    def __len__(self) -> int:
        return int(self.human_boxes.shape[0])

    @property
    def n_obj_classes(self) -> int:
        return int(self.object_probs.shape[-1]) - 1

    @property
    def n_act_classes(self) -> int:
        return int(self.action_probs.shape[-1])

    @classmethod
    def from_predictions(cls, predictions: Sequence[Prediction],
                         dtype: torch.dtype = torch.float64) -> "PredictionSet":
        if not predictions:
            raise ValidationError("a prediction set needs at least one query")
        return cls(
            human_boxes=torch.tensor([p.human_box.to_list() for p in predictions], dtype=dtype),
            object_boxes=torch.tensor([p.object_box.to_list() for p in predictions], dtype=dtype),
            object_probs=torch.tensor([list(p.object_probs) for p in predictions], dtype=dtype),
            action_probs=torch.tensor([list(p.action_probs) for p in predictions], dtype=dtype),
        )

    def to_predictions(self) -> List[Prediction]:
        human = self.human_boxes.detach().tolist()
        obj = self.object_boxes.detach().tolist()
        obj_probs = self.object_probs.detach().tolist()
        act_probs = self.action_probs.detach().tolist()
        return [
            Prediction(NormBox.from_sequence(h), NormBox.from_sequence(o), tuple(c), tuple(a))
            for h, o, c, a in zip(human, obj, obj_probs, act_probs)
        ]

    def permute(self, order: Sequence[int]) -> "PredictionSet":
        index = torch.as_tensor(list(order), dtype=torch.long)
        return PredictionSet(self.human_boxes[index], self.object_boxes[index],
                             self.object_probs[index], self.action_probs[index])

    def detach(self) -> "PredictionSet":
        return PredictionSet(self.human_boxes.detach(), self.object_boxes.detach(),
                             self.object_probs.detach(), self.action_probs.detach())


PredictionsLike = Union[PredictionSet, Sequence[Prediction]]
TargetsLike = Union[HoiTargets, Sequence[GtInstance]]


def as_prediction_set(preds: PredictionsLike) -> PredictionSet:
    if isinstance(preds, PredictionSet):
        return preds
    return PredictionSet.from_predictions(list(preds))


def as_targets(gts: TargetsLike, n_act_classes: int) -> HoiTargets:
    if isinstance(gts, HoiTargets):
        return gts
    return HoiTargets.from_instances(list(gts), n_act_classes)


def hoi_class_id(object_class: int, action_class: int, n_act_classes: int) -> int:
    """1-based (object, action) pair id: (object_class - 1) * N_act + action_class."""
    return (object_class - 1) * n_act_classes + action_class


def split_hoi_class_id(hoi_class: int, n_act_classes: int) -> Tuple[int, int]:
    object_class, action_index = divmod(hoi_class - 1, n_act_classes)
    return object_class + 1, action_index + 1
