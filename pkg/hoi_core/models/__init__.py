# -*- coding: utf-8 -*-
"""
HOI Core Models Package

Data records and configuration shared by the matcher, the losses, the
network, evaluation and the file formats.
"""

from .boxes import NormBox
from .hoi_instance import (
    GtInstance,
    Prediction,
    HoiDetection,
    HoiTargets,
    PredictionSet,
    as_prediction_set,
    as_targets,
    hoi_class_id,
    split_hoi_class_id,
)
from .configs import (
    ModelConfig,
    CostWeights,
    LossWeights,
    TrainConfig,
    EvalConfig,
    SynthConfig,
    ExperimentConfig,
    HoiSettings,
    load_experiment_config,
)

__all__ = [
    # from boxes
    'NormBox',

    # from hoi_instance
    'GtInstance',
    'Prediction',
    'HoiDetection',
    'HoiTargets',
    'PredictionSet',
    'as_prediction_set',
    'as_targets',
    'hoi_class_id',
    'split_hoi_class_id',

    # from configs
    'ModelConfig',
    'CostWeights',
    'LossWeights',
    'TrainConfig',
    'EvalConfig',
    'SynthConfig',
    'ExperimentConfig',
    'HoiSettings',
    'load_experiment_config',
]
