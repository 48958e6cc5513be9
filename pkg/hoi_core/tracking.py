# -*- coding: utf-8 -*-
"""
Training History Tracker

Records one snapshot per optimizer step (loss breakdown, learning rates,
gradient norm, wall-clock) and exports the history as JSON.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

from .errors import ValidationError
from .losses import LossBreakdown

logger = logging.getLogger(__name__)


@dataclass
class StepSnapshot:
    step: int
    loss: LossBreakdown
    lr: float
    backbone_lr: float
    grad_norm: float
    elapsed_seconds: float


class TrainingTracker:
    """Keeps the per-step history of one training run."""

    def __init__(self, log_every: int = 50, record_time: bool = True):
        self.log_every = log_every
        self.record_time = record_time
        self.history: List[StepSnapshot] = []
        self._start = time.perf_counter()

    def record_step(self, step: int, loss: LossBreakdown, lr: float, backbone_lr: float,
                    grad_norm: float) -> StepSnapshot:
        elapsed = time.perf_counter() - self._start if self.record_time else 0.0
        snapshot = StepSnapshot(step=step, loss=loss, lr=lr, backbone_lr=backbone_lr,
                                grad_norm=grad_norm, elapsed_seconds=elapsed)
        self.history.append(snapshot)
        if step % self.log_every == 0:
            logger.info(f"step {step}: total={loss.total:.6f} box={loss.box:.4f} giou={loss.giou:.4f} "
                        f"class={loss.obj_class:.4f} action={loss.action:.4f} lr={lr:.2e}")
        return snapshot

    @property
    def losses(self) -> List[LossBreakdown]:
        return [snapshot.loss for snapshot in self.history]

    def initial_total(self) -> Optional[float]:
        return self.history[0].loss.total if self.history else None

    def final_total(self) -> Optional[float]:
        return self.history[-1].loss.total if self.history else None

    def summary(self) -> Dict[str, Any]:
        return {
            "steps": len(self.history),
            "initial_total": self.initial_total(),
            "final_total": self.final_total(),
            "min_total": min((s.loss.total for s in self.history), default=None),
        }

    def export_to_json(self, file_path: str) -> None:
        logger.info(f"Exporting training history to {file_path}")
        history_as_dicts = [asdict(snapshot) for snapshot in self.history]
        try:
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump({"summary": self.summary(), "history": history_as_dicts}, f, indent=2)
        except OSError as e:
            raise ValidationError(f"cannot write training history to {file_path}: {e}") from e
