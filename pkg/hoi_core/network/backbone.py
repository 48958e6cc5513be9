# -*- coding: utf-8 -*-
"""
Convolutional feature stack standing in for a pre-trained backbone: three
stride-2 3x3 convolutions with ReLU, reducing H x W to H/8 x W/8 and ending
with `backbone_channels` channels.
"""

import torch
from torch import nn

from ..errors import ValidationError
from ..models.configs import ModelConfig


class ConvBackbone(nn.Module):

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        widths = [3, config.backbone_channels // 4, config.backbone_channels // 2, config.backbone_channels]
        self.layers = nn.ModuleList(
            nn.Conv2d(c_in, c_out, kernel_size=3, stride=2, padding=1)
            for c_in, c_out in zip(widths[:-1], widths[1:])
        )
        self.activation = nn.ReLU()

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """[B, 3, H, W] -> z_b of shape [B, D_b, H', W']."""
        expected = (3, self.config.image_h, self.config.image_w)
        if images.dim() != 4 or tuple(images.shape[1:]) != expected:
            raise ValidationError(f"expected images of shape [B, {expected[0]}, {expected[1]}, {expected[2]}], "
                                  f"got {list(images.shape)}")
        x = images
        for layer in self.layers:
            x = self.activation(layer(x))
        return x
