# -*- coding: utf-8 -*-
"""
HOI Evaluation Package

Decoding of query predictions into scored detections, and the HICO-DET and
V-COCO mAP protocols.
"""

from .decoding import decode, top_k_select, decode_image, detect
from .average_precision import Protocol, MatchResult, match_detections, average_precision
from .report import APEntry, EvalReport
from .hico import eval_hico
from .vcoco import eval_vcoco
from .binned import BinMode, binned_ap_analysis

__all__ = [
    # from decoding
    'decode',
    'top_k_select',
    'decode_image',
    'detect',

    # from average_precision
    'Protocol',
    'MatchResult',
    'match_detections',
    'average_precision',

    # from report
    'APEntry',
    'EvalReport',

    # from hico / vcoco / binned
    'eval_hico',
    'eval_vcoco',
    'BinMode',
    'binned_ap_analysis',
]
