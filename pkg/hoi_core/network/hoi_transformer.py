# -*- coding: utf-8 -*-
"""
Query-Based Pairwise HOI Network

backbone -> 1x1 projection -> encoder (with the fixed positional encoding)
-> decoder over N_q learnable queries -> shared heads on every decoder layer.
Each query's embedding is decoded into one human-object pair.
"""

import logging
from typing import Dict, List, Optional, Union

import torch
from torch import nn

from ..errors import ValidationError
from ..models.configs import ModelConfig
from ..models.hoi_instance import PredictionSet
from .backbone import ConvBackbone
from .heads import HoiHeads
from .positional_encoding import sine_positional_encoding
from .transformer import TransformerDecoder, TransformerEncoder

logger = logging.getLogger(__name__)

LayerOutputs = List[List[PredictionSet]]


class HoiTransformer(nn.Module):
    """
    The set-prediction network. All parameters are float64 and initialized
    from `config.seed` without disturbing the global RNG state.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        # module constructors draw their default init from the global generator
        with torch.random.fork_rng(devices=[]):
            self.backbone = ConvBackbone(config)
            self.input_proj = nn.Conv2d(config.backbone_channels, config.d_model, kernel_size=1)
            self.encoder = TransformerEncoder(config.n_encoder_layers, config.d_model, config.n_heads,
                                              config.ffn_hidden_dim)
            self.decoder = TransformerDecoder(config.n_decoder_layers, config.d_model, config.n_heads,
                                              config.ffn_hidden_dim)
            self.query_embed = nn.Parameter(torch.empty(config.n_queries, config.d_model))
            self.heads = HoiHeads(config)
        self.register_buffer(
            "pos_encoding",
            sine_positional_encoding(config.d_model, config.grid_h, config.grid_w),
            persistent=False,
        )
        self.to(torch.float64)
        self.reset_parameters(config.seed)

    def reset_parameters(self, seed: int) -> None:
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            with torch.no_grad():
                for name, param in self.named_parameters():
                    if name == "query_embed":
                        nn.init.normal_(param, 0.0, 1.0)
                    elif param.dim() >= 2:
                        nn.init.kaiming_uniform_(param, a=5 ** 0.5)
                    elif name.endswith("bias"):
                        nn.init.zeros_(param)
                    else:
                        nn.init.ones_(param)

    def backbone_parameters(self) -> List[nn.Parameter]:
        return list(self.backbone.parameters())

    def non_backbone_parameters(self) -> List[nn.Parameter]:
        return [p for name, p in self.named_parameters() if not name.startswith("backbone.")]

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    # --- stages --------------------------------------------------------------

    @staticmethod
    def _batched(images: torch.Tensor) -> torch.Tensor:
        return images.unsqueeze(0) if images.dim() == 3 else images

    def backbone_forward(self, images: torch.Tensor) -> torch.Tensor:
        """z_b: [B, D_b, H', W'] (a single [3, H, W] image is batched)."""
        return self.backbone(self._batched(images).to(torch.float64))

    def positional_encoding(self) -> torch.Tensor:
        """p: [d_model, H', W']."""
        return self.pos_encoding

    def project(self, z_b: torch.Tensor) -> torch.Tensor:
        """z_c: [B, d_model, H', W']."""
        return self.input_proj(z_b)

    def _check_feature_map(self, z: torch.Tensor) -> None:
        expected = (self.config.d_model, self.config.grid_h, self.config.grid_w)
        if z.dim() != 4 or tuple(z.shape[1:]) != expected:
            raise ValidationError(f"expected a feature map of shape [B, {', '.join(map(str, expected))}], "
                                  f"got {list(z.shape)}")

    def encoder_forward(self, z_c: torch.Tensor, pos: Optional[torch.Tensor] = None) -> torch.Tensor:
        """z_e = f_enc(z_c, p), same shape as z_c."""
        self._check_feature_map(z_c)
        pos = self.pos_encoding if pos is None else pos
        batch, channels, height, width = z_c.shape
        src = z_c.flatten(2).transpose(1, 2)
        pos_seq = pos.flatten(1).transpose(0, 1).unsqueeze(0).expand(batch, -1, -1)
        memory = self.encoder(src, pos_seq)
        return memory.transpose(1, 2).reshape(batch, channels, height, width)

    def decoder_forward(self, z_e: torch.Tensor, pos: Optional[torch.Tensor] = None,
                        queries: Optional[torch.Tensor] = None) -> List[torch.Tensor]:
        """One [B, N_q, d_model] embedding set per decoder layer."""
        self._check_feature_map(z_e)
        pos = self.pos_encoding if pos is None else pos
        queries = self.query_embed if queries is None else queries
        if queries.dim() != 2 or queries.shape[1] != self.config.d_model:
            raise ValidationError(f"expected queries of shape [N_q, {self.config.d_model}], got {list(queries.shape)}")
        batch = z_e.shape[0]
        memory = z_e.flatten(2).transpose(1, 2)
        pos_seq = pos.flatten(1).transpose(0, 1).unsqueeze(0).expand(batch, -1, -1)
        query_pos = queries.unsqueeze(0).expand(batch, -1, -1)
        return self.decoder(memory, pos_seq, query_pos)

    def heads_forward(self, embeddings: torch.Tensor) -> Union[PredictionSet, List[PredictionSet]]:
        """[N_q, d] -> PredictionSet; [B, N_q, d] -> one PredictionSet per image."""
        outputs = self.heads(embeddings)
        if embeddings.dim() == 2:
            return PredictionSet(**outputs)
        return [PredictionSet(**{key: value[b] for key, value in outputs.items()})
                for b in range(embeddings.shape[0])]

    # --- composition ---------------------------------------------------------

    def forward(self, images: torch.Tensor, queries: Optional[torch.Tensor] = None) -> LayerOutputs:
        """Returns predictions indexed [image][decoder layer]; the last layer is the inference output."""
        z_c = self.project(self.backbone_forward(images))
        z_e = self.encoder_forward(z_c)
        per_layer = [self.heads_forward(embeddings) for embeddings in self.decoder_forward(z_e, queries=queries)]
        n_images = z_c.shape[0]
        return [[layer[b] for layer in per_layer] for b in range(n_images)]

    def predict(self, images: torch.Tensor) -> List[PredictionSet]:
        """Final-layer predictions per image, detached."""
        with torch.no_grad():
            return [layers[-1].detach() for layers in self.forward(images)]

    def describe(self) -> Dict[str, int]:
        return {"parameters": self.count_parameters(), "queries": self.config.n_queries,
                "decoder_layers": self.config.n_decoder_layers}
