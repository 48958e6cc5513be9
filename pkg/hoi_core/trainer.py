# -*- coding: utf-8 -*-
"""
Training

Gradients of the auxiliary-summed set loss with respect to every parameter,
and an AdamW loop with separate backbone / transformer learning rates, a
single step decay, gradient-norm clipping and mini-batches averaged in a
fixed image order. The Hungarian assignment is recomputed every step and
held constant while differentiating.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import torch

from .assignment import Assignment
from .errors import NumericalError, ValidationError
from .losses import LossBreakdown, LossTerms, SetCriterion
from .models.configs import CostWeights, ExperimentConfig, LossWeights, TrainConfig
from .models.hoi_instance import GtInstance, HoiTargets
from .network.hoi_transformer import HoiTransformer
from .tracking import TrainingTracker

logger = logging.getLogger(__name__)


@dataclass
class GradientResult:
    gradients: Dict[str, torch.Tensor]
    loss: float
    terms: List[LossTerms]
    assignments: List[Assignment]


@dataclass
class TrainingResult:
    model: HoiTransformer
    history: List[LossBreakdown] = field(default_factory=list)
    tracker: Optional[TrainingTracker] = None

    @property
    def initial_loss(self) -> float:
        return self.history[0].total if self.history else float("nan")

    @property
    def final_loss(self) -> float:
        return self.history[-1].total if self.history else float("nan")


def image_objective(model: HoiTransformer, image: torch.Tensor, targets: HoiTargets, criterion: SetCriterion,
                    aux_loss: bool = True, assignments: Optional[Sequence[Assignment]] = None,
                    step: Optional[int] = None):
    """Loss of one image: all decoder layers when `aux_loss`, otherwise the last one."""
    per_layer = model(image)[0]
    if not aux_loss:
        per_layer = per_layer[-1:]
    return criterion(targets, per_layer, assignments, step)


def loss_gradients(model: HoiTransformer, image: torch.Tensor, gts: Sequence[GtInstance],
                   loss_weights: Optional[LossWeights] = None, cost_weights: Optional[CostWeights] = None,
                   assignments: Optional[Sequence[Assignment]] = None) -> GradientResult:
    """d(aux-summed total loss)/d(param) for every named parameter."""
    criterion = SetCriterion(loss_weights, cost_weights)
    targets = HoiTargets.from_instances(list(gts), model.config.n_act_classes)
    total, terms, used = image_objective(model, image, targets, criterion, assignments=assignments)
    if not torch.isfinite(total):
        raise NumericalError("non-finite total loss", component="total")

    names, params = zip(*model.named_parameters())
    grads = torch.autograd.grad(total, params, allow_unused=True)
    gradients = {
        name: (torch.zeros_like(param) if grad is None else grad.detach())
        for name, param, grad in zip(names, params, grads)
    }
    for name, grad in gradients.items():
        if not torch.isfinite(grad).all():
            raise NumericalError(f"non-finite gradient for '{name}'", component=name)
    return GradientResult(gradients, float(total), terms, used)


def _batch_order(n_images: int, batch_size: int, steps: int, seed: int) -> List[List[int]]:
    """Image indices for every step: shuffled epochs, sliced into batches."""
    generator = torch.Generator().manual_seed(seed)
    batch_size = min(batch_size, n_images)
    batches: List[List[int]] = []
    pending: List[int] = []
    while len(batches) < steps:
        if len(pending) < batch_size:
            pending += torch.randperm(n_images, generator=generator).tolist()
        batches.append(pending[:batch_size])
        pending = pending[batch_size:]
    return batches


def _mean_breakdown(per_image: List[List[LossTerms]], weights: LossWeights) -> LossBreakdown:
    """Components summed over layers, averaged over the batch."""
    fields = {"box": 0.0, "giou": 0.0, "obj_class": 0.0, "action": 0.0, "total": 0.0}
    for layers in per_image:
        for terms in layers:
            part = terms.breakdown(weights)
            for key in fields:
                fields[key] += getattr(part, key)
    return LossBreakdown(**{key: value / len(per_image) for key, value in fields.items()})


def build_optimizer(model: HoiTransformer, train: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        [
            {"params": model.non_backbone_parameters(), "lr": train.lr},
            {"params": model.backbone_parameters(), "lr": train.backbone_lr},
        ],
        lr=train.lr,
        weight_decay=train.weight_decay,
    )


def train(images: torch.Tensor, gts: Sequence[Sequence[GtInstance]], config: ExperimentConfig,
          model: Optional[HoiTransformer] = None, tracker: Optional[TrainingTracker] = None) -> TrainingResult:
    """
    Optimize `model` (a fresh one from `config.model` if omitted) on the
    images [N, 3, H, W] and their ground truths. Deterministic for a fixed
    seed on a single thread.
    """
    if len(images) == 0:
        raise ValidationError("cannot train on an empty dataset")
    if len(images) != len(gts):
        raise ValidationError(f"{len(images)} images but {len(gts)} ground-truth lists")

    train_cfg = config.train
    model = model or HoiTransformer(config.model)
    tracker = tracker or TrainingTracker(log_every=train_cfg.log_every)
    criterion = SetCriterion(config.loss_weights, config.cost_weights)
    targets = [HoiTargets.from_instances(list(image_gts), config.model.n_act_classes) for image_gts in gts]
    images = images.to(torch.float64)

    optimizer = build_optimizer(model, train_cfg)
    scheduler = None
    if train_cfg.lr_drop_step is not None:
        scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=train_cfg.lr_drop_step,
                                                    gamma=train_cfg.lr_gamma)

    logger.info(f"Training {model.count_parameters()} parameters on {len(images)} images "
                f"for {train_cfg.steps} steps")
    model.train()
    history: List[LossBreakdown] = []
    for step, batch in enumerate(_batch_order(len(images), train_cfg.batch_size, train_cfg.steps, train_cfg.seed)):
        optimizer.zero_grad(set_to_none=True)
        losses = []
        batch_terms = []
        for index in batch:
            total, terms, _ = image_objective(model, images[index], targets[index], criterion,
                                              aux_loss=train_cfg.aux_loss, step=step)
            losses.append(total)
            batch_terms.append(terms)
        objective = torch.stack(losses).sum() / len(batch)
        if not torch.isfinite(objective):
            raise NumericalError("non-finite training loss", component="total", step=step)
        objective.backward()

        if train_cfg.clip_max_norm > 0:
            grad_norm = float(torch.nn.utils.clip_grad_norm_(model.parameters(), train_cfg.clip_max_norm))
        else:
            grad_norm = float(torch.linalg.vector_norm(
                torch.stack([p.grad.norm() for p in model.parameters() if p.grad is not None])))
        if not math.isfinite(grad_norm):
            raise NumericalError("non-finite gradient norm", component="gradients", step=step)

        breakdown = _mean_breakdown(batch_terms, config.loss_weights)
        history.append(breakdown)
        tracker.record_step(step, breakdown, optimizer.param_groups[0]["lr"], optimizer.param_groups[1]["lr"],
                            grad_norm)

        optimizer.step()
        if scheduler is not None:
            scheduler.step()

    model.eval()
    if history:
        logger.info(f"Training finished: total loss {history[0].total:.6f} -> {history[-1].total:.6f}")
    return TrainingResult(model, history, tracker)
