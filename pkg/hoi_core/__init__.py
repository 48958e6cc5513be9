# -*- coding: utf-8 -*-
"""
HOI Core Package

Query-based human-object interaction detection at desk scale: box geometry,
Hungarian matching, set-prediction losses, a toy transformer detector,
decoding and the HICO-DET / V-COCO evaluation protocols.
"""

__version__ = "1.0.0"
