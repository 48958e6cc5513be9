# -*- coding: utf-8 -*-
"""
Normalized Box Model

A bounding box in image-normalized units, stored in center-size form because
the network heads regress (cx, cy, w, h) through a sigmoid.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence

import torch


@dataclass(frozen=True)
class NormBox:
    """Center-size box; the corner form is derived on demand by geometry.to_corners."""
    cx: float
    cy: float
    w: float
    h: float

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "NormBox":
        if len(values) != 4:
            raise ValueError(f"a box needs 4 values, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))

    @classmethod
    def empty(cls) -> "NormBox":
        """The all-zero sentinel used for object-less interactions."""
        return cls(0.0, 0.0, 0.0, 0.0)

    def to_list(self) -> List[float]:
        return [self.cx, self.cy, self.w, self.h]

    def as_tensor(self, dtype: torch.dtype = torch.float64) -> torch.Tensor:
        return torch.tensor(self.to_list(), dtype=dtype)

    def is_empty(self) -> bool:
        return self.cx == 0.0 and self.cy == 0.0 and self.w == 0.0 and self.h == 0.0

    def in_unit_range(self) -> bool:
        return all(0.0 <= value <= 1.0 for value in self.to_list())

    def to_dict(self) -> Dict[str, float]:
        return {"cx": self.cx, "cy": self.cy, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "NormBox":
        return cls(float(data["cx"]), float(data["cy"]), float(data["w"]), float(data["h"]))
