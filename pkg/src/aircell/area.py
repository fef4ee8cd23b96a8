"""Operating-area bounds shared by the mobility models and the scenario runner."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AreaBounds:
    """Axis-aligned operating volume; ground users live on the h=0 plane."""

    x_min: float = 0.0
    x_max: float = 1000.0
    y_min: float = 0.0
    y_max: float = 1000.0
    h_min: float = 50.0
    h_max: float = 300.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max and self.h_min < self.h_max):
            raise ValueError("area bounds require min < max on every axis")
        if self.h_min <= 0:
            raise ValueError("h_min must be positive (UAVs never sit on the ground plane)")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def depth(self) -> float:
        return self.y_max - self.y_min

    @property
    def altitude_span(self) -> float:
        return self.h_max - self.h_min

    @property
    def diagonal(self) -> float:
        """Longest possible 3D separation between two UAVs in the volume."""
        return math.sqrt(self.width**2 + self.depth**2 + self.altitude_span**2)

    def contains(self, pos) -> bool:
        x, y, h = pos
        return (
            self.x_min <= x <= self.x_max
            and self.y_min <= y <= self.y_max
            and self.h_min <= h <= self.h_max
        )

    def clamp(self, pos: np.ndarray) -> np.ndarray:
        lo = np.array([self.x_min, self.y_min, self.h_min])
        hi = np.array([self.x_max, self.y_max, self.h_max])
        return np.clip(pos, lo, hi)
