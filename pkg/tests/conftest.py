# -*- coding: utf-8 -*-
"""Shared fixtures: box, ground-truth and prediction factories plus small configs."""

import sys
from pathlib import Path
from typing import Optional, Sequence

import pytest
import torch

# --- make the package importable without installation ---
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from hoi_core.geometry import from_corners  # noqa: E402
from hoi_core.models import GtInstance, NormBox, Prediction  # noqa: E402
from hoi_core.models.configs import ExperimentConfig, ModelConfig  # noqa: E402


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


def corner_box(x1: float, y1: float, x2: float, y2: float) -> NormBox:
    return from_corners((x1, y1, x2, y2))


def gt(human: NormBox, obj: NormBox, object_class: int = 1, actions: Sequence[int] = (1, 0),
       has_object: bool = True) -> GtInstance:
    return GtInstance(human, obj, object_class, tuple(actions), has_object)


def pred(human: NormBox, obj: NormBox, object_probs: Sequence[float] = (1.0, 0.0),
         action_probs: Sequence[float] = (1.0, 0.0)) -> Prediction:
    return Prediction(human, obj, tuple(float(p) for p in object_probs), tuple(float(p) for p in action_probs))


@pytest.fixture
def make_box():
    return corner_box


@pytest.fixture
def make_gt():
    return gt


@pytest.fixture
def make_pred():
    return pred


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    return ExperimentConfig.profile("tiny")


@pytest.fixture
def tiny_model_config(tiny_config) -> ModelConfig:
    return tiny_config.model


def random_box(generator: torch.Generator, min_size: float = 0.05) -> NormBox:
    cx, cy, w, h = torch.rand(4, generator=generator, dtype=torch.float64).tolist()
    w = min_size + w * (1.0 - min_size) * 0.5
    h = min_size + h * (1.0 - min_size) * 0.5
    cx = w / 2 + cx * (1.0 - w)
    cy = h / 2 + cy * (1.0 - h)
    return NormBox(cx, cy, w, h)


@pytest.fixture
def make_random_box():
    def factory(seed: Optional[int] = None, generator: Optional[torch.Generator] = None) -> NormBox:
        if generator is None:
            generator = torch.Generator().manual_seed(seed or 0)
        return random_box(generator)
    return factory
