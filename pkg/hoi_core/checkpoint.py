# -*- coding: utf-8 -*-
"""
Parameter Checkpoints

A checkpoint is a JSONL file. Line 1 is the header

    {"type": "header", "format": "hoi-checkpoint", "version": 1, "model_config": {...}}

and every following line holds one parameter in `named_parameters()` order:

    {"type": "param", "name": "backbone.layers.0.weight", "shape": [8, 3, 3, 3], "values": [...]}

with `values` the row-major flattening of the float64 tensor.
"""

import logging
from pathlib import Path
from typing import Union

import torch
from pydantic import ValidationError as PydanticValidationError

from .data.jsonl import read_jsonl, write_jsonl
from .data.schemas import CHECKPOINT_HEADER_SCHEMA, CHECKPOINT_PARAM_SCHEMA, FORMAT_VERSION, validate_record
from .errors import ValidationError
from .models.configs import ModelConfig
from .network.hoi_transformer import HoiTransformer

logger = logging.getLogger(__name__)


def save_checkpoint(model: HoiTransformer, path: Union[str, Path]) -> None:
    lines = [{
        "type": "header",
        "format": "hoi-checkpoint",
        "version": FORMAT_VERSION,
        "model_config": model.config.model_dump(),
    }]
    for name, param in model.named_parameters():
        tensor = param.detach().to(torch.float64).contiguous()
        lines.append({"type": "param", "name": name, "shape": list(tensor.shape),
                      "values": tensor.flatten().tolist()})
    write_jsonl(path, lines)
    logger.info(f"Saved {len(lines) - 1} parameter tensors to {path}")


def load_checkpoint(path: Union[str, Path]) -> HoiTransformer:
    path = Path(path)
    lines = read_jsonl(path)
    lineno, header = lines[0]
    validate_record(header, CHECKPOINT_HEADER_SCHEMA, f"{path}:{lineno}")
    try:
        config = ModelConfig.model_validate(header["model_config"])
    except PydanticValidationError as e:
        raise ValidationError(f"{path}: invalid model config: {e}") from e

    model = HoiTransformer(config)
    params = dict(model.named_parameters())
    loaded = set()
    with torch.no_grad():
        for lineno, record in lines[1:]:
            where = f"{path}:{lineno}"
            validate_record(record, CHECKPOINT_PARAM_SCHEMA, where)
            name = record["name"]
            if name not in params:
                raise ValidationError(f"{where}: unknown parameter '{name}'")
            target = params[name]
            if list(target.shape) != record["shape"]:
                raise ValidationError(f"{where}: '{name}' has shape {record['shape']}, expected {list(target.shape)}")
            values = torch.tensor(record["values"], dtype=torch.float64)
            if values.numel() != target.numel():
                raise ValidationError(f"{where}: '{name}' has {values.numel()} values, expected {target.numel()}")
            target.copy_(values.reshape(target.shape))
            loaded.add(name)

    missing = sorted(set(params) - loaded)
    if missing:
        raise ValidationError(f"{path}: missing parameters {', '.join(missing[:5])}")
    logger.info(f"Loaded {len(loaded)} parameter tensors from {path}")
    return model
