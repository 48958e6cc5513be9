# -*- coding: utf-8 -*-
"""
Finite-Difference Gradient Check

Compares autograd gradients of the training loss with central differences.
The Hungarian assignment is computed once at the unperturbed parameters and
held fixed for every perturbed evaluation, so both sides differentiate the
same piecewise-smooth function.

Coordinates whose +/- step moves any ReLU input across zero straddle a kink,
where a central difference does not estimate the derivative. They are skipped
and, when sampling, replaced by another coordinate of the same parameter.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .data.synthetic import generate_synthetic
from .errors import ValidationError
from .losses import SetCriterion
from .models.configs import SYNTH_ACTION_NAMES, CostWeights, ExperimentConfig, LossWeights, SynthConfig
from .models.hoi_instance import GtInstance, HoiTargets
from .network.hoi_transformer import HoiTransformer
from .trainer import image_objective, loss_gradients

logger = logging.getLogger(__name__)


@dataclass
class GradientMismatch:
    parameter: str
    index: int
    analytic: float
    numeric: float


@dataclass
class GradcheckReport:
    n_checked: int = 0
    n_skipped: int = 0
    max_abs_error: float = 0.0
    max_rel_error: float = 0.0
    failures: List[GradientMismatch] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "GradcheckReport") -> "GradcheckReport":
        return GradcheckReport(
            n_checked=self.n_checked + other.n_checked,
            n_skipped=self.n_skipped + other.n_skipped,
            max_abs_error=max(self.max_abs_error, other.max_abs_error),
            max_rel_error=max(self.max_rel_error, other.max_rel_error),
            failures=self.failures + other.failures,
        )


class ReluSignRecorder:
    """Records which inputs of every nn.ReLU in `model` are positive, per forward pass."""

    def __init__(self, model: nn.Module):
        self.patterns: List[torch.Tensor] = []
        self._handles = [module.register_forward_hook(self._record)
                         for module in model.modules() if isinstance(module, nn.ReLU)]

    def _record(self, module: nn.Module, inputs: Tuple[torch.Tensor, ...], output: torch.Tensor) -> None:
        self.patterns.append(inputs[0].detach() > 0)

    def capture(self, fn: Callable[[], float]) -> Tuple[float, List[torch.Tensor]]:
        self.patterns = []
        value = fn()
        return value, self.patterns

    @staticmethod
    def same(a: Sequence[torch.Tensor], b: Sequence[torch.Tensor]) -> bool:
        return len(a) == len(b) and all(torch.equal(x, y) for x, y in zip(a, b))

    def remove(self) -> None:
        for handle in self._handles:
            handle.remove()
        self._handles = []


def check_gradients(model: HoiTransformer, image: torch.Tensor, gts: Sequence[GtInstance],
                    loss_weights: Optional[LossWeights] = None, cost_weights: Optional[CostWeights] = None,
                    step: float = 1e-5, rtol: float = 1e-3, atol: float = 1e-6,
                    samples_per_param: Optional[int] = None, seed: int = 0) -> GradcheckReport:
    """
    Check every coordinate of every parameter, or `samples_per_param`
    randomly chosen coordinates of each. A coordinate passes when
    |analytic - numeric| <= max(atol, rtol * max(|analytic|, |numeric|)).
    """
    base = loss_gradients(model, image, gts, loss_weights, cost_weights)
    criterion = SetCriterion(loss_weights, cost_weights)
    targets = HoiTargets.from_instances(list(gts), model.config.n_act_classes)
    rng = np.random.default_rng(seed)

    def objective() -> float:
        with torch.no_grad():
            total, _, _ = image_objective(model, image, targets, criterion, assignments=base.assignments)
        return float(total)

    report = GradcheckReport()
    recorder = ReluSignRecorder(model)
    try:
        _, base_signs = recorder.capture(objective)
        for name, param in model.named_parameters():
            analytic_flat = base.gradients[name].reshape(-1)
            n = param.numel()
            if samples_per_param is None or samples_per_param >= n:
                order, quota = range(n), n
            else:
                order, quota = rng.permutation(n).tolist(), samples_per_param

            flat = param.data.view(-1)
            checked = 0
            for index in order:
                if checked == quota:
                    break
                original = float(flat[index])
                flat[index] = original + step
                plus, plus_signs = recorder.capture(objective)
                flat[index] = original - step
                minus, minus_signs = recorder.capture(objective)
                flat[index] = original

                if not (recorder.same(plus_signs, base_signs) and recorder.same(minus_signs, base_signs)):
                    report.n_skipped += 1
                    continue
                checked += 1

                numeric = (plus - minus) / (2 * step)
                analytic = float(analytic_flat[index])
                error = abs(analytic - numeric)
                scale = max(abs(analytic), abs(numeric))
                report.n_checked += 1
                report.max_abs_error = max(report.max_abs_error, error)
                if scale > 0:
                    report.max_rel_error = max(report.max_rel_error, error / scale)
                if error > max(atol, rtol * scale):
                    report.failures.append(GradientMismatch(name, index, analytic, numeric))
    finally:
        recorder.remove()
    return report


Instance = Tuple[HoiTransformer, torch.Tensor, List[GtInstance]]


def random_instances(config: ExperimentConfig, n_instances: int, seed: int) -> List[Instance]:
    """
    Independently seeded (model, image, ground truths) triples at `config.model`
    scale: synthetic ground truths over a dense uniform-noise image.
    """
    model_cfg = config.model
    if model_cfg.n_act_classes != len(SYNTH_ACTION_NAMES):
        raise ValidationError(f"synthetic instances have {len(SYNTH_ACTION_NAMES)} actions, "
                              f"the model predicts {model_cfg.n_act_classes}")
    synth = SynthConfig(seed=seed, n_images=n_instances, image_h=model_cfg.image_h, image_w=model_cfg.image_w,
                        n_obj_classes=model_cfg.n_obj_classes,
                        max_instances=min(2, model_cfg.n_queries))
    dataset = generate_synthetic(synth, with_rasters=False)
    rng = np.random.default_rng(seed)
    images = torch.from_numpy(rng.uniform(0.0, 1.0, size=(n_instances, 3, model_cfg.image_h, model_cfg.image_w)))
    return [
        (HoiTransformer(model_cfg.model_copy(update={"seed": seed + i})), images[i], list(record.instances))
        for i, record in enumerate(dataset.records)
    ]


def run_gradcheck(config: ExperimentConfig, n_instances: int = 10, seed: int = 0, step: float = 1e-5,
                  rtol: float = 1e-3, atol: float = 1e-6,
                  samples_per_param: Optional[int] = None) -> GradcheckReport:
    report = GradcheckReport()
    for i, (model, image, gts) in enumerate(random_instances(config, n_instances, seed)):
        instance_report = check_gradients(model, image, gts, config.loss_weights, config.cost_weights,
                                          step=step, rtol=rtol, atol=atol,
                                          samples_per_param=samples_per_param, seed=seed + i)
        logger.info(f"instance {i}: {instance_report.n_checked} coordinates, {instance_report.n_skipped} on kinks, "
                    f"{len(instance_report.failures)} mismatches, max rel error {instance_report.max_rel_error:.2e}")
        report = report.merge(instance_report)
    return report
