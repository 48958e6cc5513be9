# -*- coding: utf-8 -*-
"""
Prediction heads shared by every decoder layer: two 3-layer box MLPs with a
sigmoid, a linear object classifier over N_obj + 1 classes with a softmax
(the last class is no-pair), and a linear action classifier with a sigmoid.
"""

from typing import Dict

import torch
from torch import nn

from ..models.configs import ModelConfig


class MLP(nn.Module):
    """Multi-layer perceptron with ReLU between layers."""

    def __init__(self, input_dim: int, hidden_dim: int, output_dim: int, num_layers: int):
        super().__init__()
        self.num_layers = num_layers
        hidden = [hidden_dim] * (num_layers - 1)
        self.layers = nn.ModuleList(nn.Linear(n, k) for n, k in zip([input_dim] + hidden, hidden + [output_dim]))
        self.activation = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for i, layer in enumerate(self.layers):
            x = self.activation(layer(x)) if i < self.num_layers - 1 else layer(x)
        return x


class HoiHeads(nn.Module):

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.d_model
        self.human_box = MLP(d, d, 4, 3)
        self.object_box = MLP(d, d, 4, 3)
        self.object_class = nn.Linear(d, config.n_obj_classes + 1)
        self.action_class = nn.Linear(d, config.n_act_classes)

    def forward(self, embeddings: torch.Tensor) -> Dict[str, torch.Tensor]:
        """[..., d_model] -> probability-space outputs with the same leading shape."""
        return {
            "human_boxes": torch.sigmoid(self.human_box(embeddings)),
            "object_boxes": torch.sigmoid(self.object_box(embeddings)),
            "object_probs": torch.softmax(self.object_class(embeddings), dim=-1),
            "action_probs": torch.sigmoid(self.action_class(embeddings)),
        }
