# -*- coding: utf-8 -*-
"""
HOI Network Package
"""

from .backbone import ConvBackbone
from .positional_encoding import sine_positional_encoding
from .transformer import TransformerEncoder, TransformerDecoder
from .heads import MLP, HoiHeads
from .hoi_transformer import HoiTransformer

__all__ = [
    'ConvBackbone',
    'sine_positional_encoding',
    'TransformerEncoder',
    'TransformerDecoder',
    'MLP',
    'HoiHeads',
    'HoiTransformer',
]
