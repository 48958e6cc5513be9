# -*- coding: utf-8 -*-
"""
HOI Data Package

Synthetic scene generation and the line-delimited dataset / prediction file
formats.
"""

from .dataset_file import DatasetHeader, ImageRecord, HoiDataset, read_dataset, write_dataset
from .prediction_file import DetectionFile, QueryPredictionFile
from .synthetic import generate_synthetic, relation_labels, render

__all__ = [
    # from dataset_file
    'DatasetHeader',
    'ImageRecord',
    'HoiDataset',
    'read_dataset',
    'write_dataset',

    # from prediction_file
    'DetectionFile',
    'QueryPredictionFile',

    # from synthetic
    'generate_synthetic',
    'relation_labels',
    'render',
]
