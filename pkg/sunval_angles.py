"""
sunval_angles.py - Angle values shared by the camera, shadow solver, ephemeris and validator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from sunval_errors import DomainError


def normalize_degrees(angle_deg: float) -> float:
    a = math.fmod(angle_deg, 360.0)
    if a < 0:
        a += 360.0
    # fmod of a tiny negative can round up to exactly 360
    return 0.0 if a >= 360.0 else a


@dataclass(frozen=True)
class SunPosition:
    """Azimuth clockwise from north and altitude above the horizon, degrees.

    Either angle may be None when the inputs only support the other one.
    """

    azimuth_deg: Optional[float] = None
    altitude_deg: Optional[float] = None

    def __post_init__(self):
        if self.azimuth_deg is not None:
            if not math.isfinite(self.azimuth_deg):
                raise DomainError(f"azimuth must be finite, got {self.azimuth_deg}")
            object.__setattr__(self, "azimuth_deg", normalize_degrees(float(self.azimuth_deg)))
        if self.altitude_deg is not None:
            if not (-90.0 < self.altitude_deg <= 90.0):
                raise DomainError(f"altitude must be in range (-90, 90], got {self.altitude_deg}")
            object.__setattr__(self, "altitude_deg", float(self.altitude_deg))

    @property
    def complete(self) -> bool:
        return self.azimuth_deg is not None and self.altitude_deg is not None
