# -*- coding: utf-8 -*-
"""
Fixed 2D sine positional encoding.

Half of the channels encode the row, half the column. Positions are
normalized to (0, 2*pi] and expanded over d_model/4 geometric frequencies
with ratio `temperature`, interleaving sine and cosine.
"""

import math

import torch

from ..errors import ValidationError


def sine_positional_encoding(d_model: int, grid_h: int, grid_w: int, temperature: float = 10000.0,
                             dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """Returns a [d_model, grid_h, grid_w] tensor with entries in [-1, 1]."""
    if d_model % 4 != 0:
        raise ValidationError(f"d_model={d_model} must be divisible by 4")
    n_feats = d_model // 2
    scale = 2 * math.pi

    y_embed = torch.arange(1, grid_h + 1, dtype=dtype)[:, None].expand(grid_h, grid_w)
    x_embed = torch.arange(1, grid_w + 1, dtype=dtype)[None, :].expand(grid_h, grid_w)
    y_embed = y_embed / grid_h * scale
    x_embed = x_embed / grid_w * scale

    dim_t = torch.arange(n_feats, dtype=dtype)
    dim_t = temperature ** (2 * torch.div(dim_t, 2, rounding_mode="floor") / n_feats)

    pos_x = x_embed[:, :, None] / dim_t
    pos_y = y_embed[:, :, None] / dim_t
    pos_x = torch.stack((pos_x[:, :, 0::2].sin(), pos_x[:, :, 1::2].cos()), dim=3).flatten(2)
    pos_y = torch.stack((pos_y[:, :, 0::2].sin(), pos_y[:, :, 1::2].cos()), dim=3).flatten(2)
    return torch.cat((pos_y, pos_x), dim=2).permute(2, 0, 1).contiguous()
