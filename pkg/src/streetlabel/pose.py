from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geo import GeoPoint, normalize_bearing


@dataclass(frozen=True)
class CameraPose:
    """A panorama capture: position plus the vehicle's true heading (radians)."""

    pano_id: str
    pos: GeoPoint
    heading: float
    source_width_px: int = 13312
    source_height_px: int = 6656
    capture_date: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.heading):
            raise ValueError("heading must be finite")
        object.__setattr__(self, "heading", normalize_bearing(self.heading))
        if self.source_width_px <= 0 or self.source_height_px <= 0:
            raise ValueError("source dimensions must be positive")

    def rotated(self, yaw: float) -> "CameraPose":
        """The same capture looking ``yaw`` radians clockwise of the vehicle heading."""
        return CameraPose(self.pano_id, self.pos, self.heading + yaw,
                          self.source_width_px, self.source_height_px, self.capture_date)
