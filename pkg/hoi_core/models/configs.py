# -*- coding: utf-8 -*-
"""
Configuration Models

Typed, validated configuration for every stage of the pipeline. The built-in
defaults are the published full-scale hyper-parameters; `desk` and `tiny`
profiles shrink the network for CPU experiments and gradient checks.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..errors import ValidationError

logger = logging.getLogger(__name__)

# Three stride-2 convolutions sit between the image and the feature grid.
BACKBONE_STRIDE = 8

SYNTH_ACTION_NAMES = ("overlapping", "adjacent", "distant_aligned")


class ModelConfig(BaseModel):
    """Network shape: D_c, heads, layer counts, N_q, N_obj, N_act, D_b, H', W', H, W."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    d_model: int = Field(256, ge=4)
    n_heads: int = Field(8, ge=1)
    n_encoder_layers: int = Field(6, ge=0)
    n_decoder_layers: int = Field(6, ge=1)
    n_queries: int = Field(100, ge=1)
    n_obj_classes: int = Field(80, ge=1)
    n_act_classes: int = Field(117, ge=1)
    ffn_hidden_dim: int = Field(2048, ge=1)
    backbone_channels: int = Field(2048, ge=4)
    grid_h: int = Field(8, ge=1)
    grid_w: int = Field(8, ge=1)
    image_h: int = Field(64, ge=1)
    image_w: int = Field(64, ge=1)
    seed: int = 42

    @model_validator(mode="after")
    def _check_shapes(self) -> "ModelConfig":
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.d_model % 4 != 0:
            raise ValueError(f"d_model={self.d_model} must be divisible by 4 for the 2D positional encoding")
        if self.backbone_channels % 4 != 0:
            raise ValueError(f"backbone_channels={self.backbone_channels} must be divisible by 4")
        if self.image_h != BACKBONE_STRIDE * self.grid_h or self.image_w != BACKBONE_STRIDE * self.grid_w:
            raise ValueError(
                f"image {self.image_h}x{self.image_w} does not reduce to grid "
                f"{self.grid_h}x{self.grid_w} with stride {BACKBONE_STRIDE}"
            )
        return self

    @classmethod
    def full(cls, **overrides: Any) -> "ModelConfig":
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides: Any) -> "ModelConfig":
        values = dict(d_model=32, n_heads=4, n_encoder_layers=2, n_decoder_layers=2, n_queries=8,
                      n_obj_classes=3, n_act_classes=3, ffn_hidden_dim=64, backbone_channels=32,
                      grid_h=8, grid_w=8, image_h=64, image_w=64)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def tiny(cls, **overrides: Any) -> "ModelConfig":
        values = dict(d_model=16, n_heads=2, n_encoder_layers=1, n_decoder_layers=1, n_queries=4,
                      n_obj_classes=2, n_act_classes=3, ffn_hidden_dim=16, backbone_channels=8,
                      grid_h=4, grid_w=4, image_h=32, image_w=32)
        values.update(overrides)
        return cls(**values)


class CostWeights(BaseModel):
    """Matching-cost weights eta_b, eta_u, eta_c, eta_a and the action-cost epsilon."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_b: float = Field(2.5, ge=0.0)
    eta_u: float = Field(1.0, ge=0.0)
    eta_c: float = Field(1.0, ge=0.0)
    eta_a: float = Field(1.0, ge=0.0)
    epsilon: float = Field(1e-4, gt=0.0)


class LossWeights(BaseModel):
    """Loss weights lambda_b, lambda_u, lambda_c, lambda_a plus focal and clamping settings."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda_b: float = Field(2.5, ge=0.0)
    lambda_u: float = Field(1.0, ge=0.0)
    lambda_c: float = Field(1.0, ge=0.0)
    lambda_a: float = Field(1.0, ge=0.0)
    focal_gamma: float = Field(2.0, ge=0.0)
    prob_clamp: float = Field(1e-7, gt=0.0, lt=0.5)

    def scaled(self, factor: float) -> "LossWeights":
        return self.model_copy(update={
            "lambda_b": self.lambda_b * factor,
            "lambda_u": self.lambda_u * factor,
            "lambda_c": self.lambda_c * factor,
            "lambda_a": self.lambda_a * factor,
        })


class TrainConfig(BaseModel):
    """AdamW schedule: two learning rates, decoupled weight decay, a single step decay."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: int = Field(1000, ge=0)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-4, ge=0.0)
    backbone_lr: float = Field(1e-5, ge=0.0)
    weight_decay: float = Field(1e-4, ge=0.0)
    lr_drop_step: Optional[int] = Field(None, ge=1)
    lr_gamma: float = Field(0.1, gt=0.0)
    clip_max_norm: float = Field(0.1, ge=0.0)
    aux_loss: bool = True
    log_every: int = Field(50, ge=1)
    seed: int = 42


class EvalConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    iou_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    top_k: int = Field(100, ge=1)
    rare_threshold: int = Field(10, ge=1)
    score_threshold: float = Field(0.0, ge=0.0, le=1.0)
    vcoco_scenario: int = Field(1, ge=1, le=2)
    vcoco_excluded_actions: Tuple[int, ...] = ()
    bin_width: float = Field(0.1, gt=0.0)
    min_bin_instances: int = Field(10, ge=0)


class SynthConfig(BaseModel):
    """Synthetic scenes whose action labels are pure functions of box geometry."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = 7
    n_images: int = Field(8, ge=1)
    image_h: int = Field(64, ge=8)
    image_w: int = Field(64, ge=8)
    n_obj_classes: int = Field(3, ge=1)
    min_instances: int = Field(1, ge=1)
    max_instances: int = Field(2, ge=1)
    min_box_size: float = Field(0.15, gt=0.0, lt=1.0)
    max_box_size: float = Field(0.3, gt=0.0, lt=1.0)
    adjacency_gap: float = Field(0.04, gt=0.0, lt=1.0)
    align_tolerance: float = Field(0.03, gt=0.0, lt=1.0)

    @property
    def n_act_classes(self) -> int:
        return len(SYNTH_ACTION_NAMES)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SynthConfig":
        if self.min_instances > self.max_instances:
            raise ValueError("min_instances exceeds max_instances")
        if self.min_box_size > self.max_box_size:
            raise ValueError("min_box_size exceeds max_box_size")
        return self


class ExperimentConfig(BaseModel):
    """Everything a run needs; serialized as the JSON experiment config."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    cost_weights: CostWeights = Field(default_factory=CostWeights)
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    @classmethod
    def profile(cls, name: str) -> "ExperimentConfig":
        if name == "full":
            return cls()
        if name == "desk":
            return cls(model=ModelConfig.desk(),
                       train=TrainConfig(steps=2000, batch_size=8, lr=1e-3, backbone_lr=1e-3,
                                         lr_drop_step=1500))
        if name == "tiny":
            return cls(model=ModelConfig.tiny(), train=TrainConfig(steps=10, batch_size=2))
        raise ValidationError(f"unknown profile '{name}' (expected full, desk or tiny)")

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> "ExperimentConfig":
        """Return a copy with per-section field overrides; None values are ignored."""
        data = self.model_dump()
        for section, values in overrides.items():
            data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
        try:
            return ExperimentConfig.model_validate(data)
        except PydanticValidationError as e:
            raise ValidationError(f"invalid configuration: {e}") from e


def load_experiment_config(source: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Load a profile name ("full", "desk", "tiny") or a JSON experiment file.

    A JSON file may name a base profile under "profile"; its sections then
    override that profile field by field.
    """
    if source is None:
        return ExperimentConfig()
    source_str = str(source)
    if source_str in ("full", "desk", "tiny"):
        return ExperimentConfig.profile(source_str)

    path = Path(source_str)
    if not path.is_file():
        raise ValidationError(f"config '{source_str}' is neither a profile nor a file")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file {path} is not valid JSON: {e}") from e

    base = ExperimentConfig.profile(data.pop("profile", "full"))
    logger.debug(f"Loaded experiment config from {path}")
    return base.with_overrides(data)


class HoiSettings(BaseSettings):
    """Process settings read from HOI_* environment variables or a .env file."""
    model_config = SettingsConfigDict(env_prefix="HOI_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    num_threads: int = 1
    output_dir: str = "outputs"
