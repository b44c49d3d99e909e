#!/usr/bin/env python3
"""
sunval_validator.py - Compare shadow-inferred and claimed-metadata sun positions.

Default rule: consistent when d_h <= 5.0 and d_p <= 9.4 degrees. When the
shadow azimuth is missing (no camera yaw) only d_h is checked; when the shadow
altitude is missing (no object top) only the azimuth distance is checked.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from sunval_angles import SunPosition
from sunval_errors import DomainError, ValidationImpossibleError

log = logging.getLogger(__name__)

DEFAULT_ALTITUDE_THRESHOLD_DEG = 5.0
DEFAULT_POSITION_THRESHOLD_DEG = 9.4


class RuleMode(str, Enum):
    COMBINED = "combined"
    ALTITUDE_ONLY = "altitude_only"
    AZIMUTH_ONLY = "azimuth_only"
    AZIMUTH_STUDY = "azimuth_study"


@dataclass(frozen=True)
class Thresholds:
    altitude_threshold_deg: float = DEFAULT_ALTITUDE_THRESHOLD_DEG
    position_threshold_deg: float = DEFAULT_POSITION_THRESHOLD_DEG
    azimuth_threshold_deg: Optional[float] = None

    def __post_init__(self):
        for name in ("altitude_threshold_deg", "position_threshold_deg", "azimuth_threshold_deg"):
            value = getattr(self, name)
            if value is None and name == "azimuth_threshold_deg":
                continue
            if not (value > 0):
                raise DomainError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class Verdict:
    d_h: Optional[float]
    d_A: Optional[float]
    d_p: Optional[float]
    consistent: bool
    rule_applied: RuleMode

    def as_dict(self) -> Dict[str, Any]:
        return {
            "d_h": self.d_h,
            "d_A": self.d_A,
            "d_p": self.d_p,
            "consistent": self.consistent,
            "rule_applied": self.rule_applied.value,
        }


def altitude_distance(h_s: float, h_m: float) -> float:
    if not (math.isfinite(h_s) and math.isfinite(h_m)):
        raise DomainError(f"altitudes must be finite, got {h_s}, {h_m}")
    return abs(h_s - h_m)


def azimuth_distance(a_s: float, a_m: float) -> float:
    d = abs(a_s - a_m) % 360.0
    return min(d, 360.0 - d)


def position_distance(d_a: float, d_h: float) -> float:
    if d_a < 0 or d_h < 0:
        raise DomainError(f"distances must be >= 0, got d_A={d_a}, d_h={d_h}")
    return math.hypot(d_a, d_h)


def validate(shadow: SunPosition, context: SunPosition, th: Thresholds = Thresholds()) -> Verdict:
    if shadow.altitude_deg is None and shadow.azimuth_deg is None:
        raise ValidationImpossibleError("shadow gives neither altitude nor azimuth")
    if shadow.altitude_deg is not None and not (0.0 < shadow.altitude_deg < 90.0):
        raise DomainError(f"shadow altitude must be in range (0, 90), got {shadow.altitude_deg}")
    if context.altitude_deg is None or context.azimuth_deg is None:
        raise ValidationImpossibleError("claimed-metadata sun position is incomplete")

    if shadow.azimuth_deg is None:
        d_h = altitude_distance(shadow.altitude_deg, context.altitude_deg)
        return Verdict(d_h, None, None, d_h <= th.altitude_threshold_deg, RuleMode.ALTITUDE_ONLY)

    d_a = azimuth_distance(shadow.azimuth_deg, context.azimuth_deg)
    if shadow.altitude_deg is None:
        limit = th.azimuth_threshold_deg if th.azimuth_threshold_deg is not None else th.position_threshold_deg
        return Verdict(None, d_a, None, d_a <= limit, RuleMode.AZIMUTH_ONLY)

    d_h = altitude_distance(shadow.altitude_deg, context.altitude_deg)
    d_p = position_distance(d_a, d_h)
    ok = d_h <= th.altitude_threshold_deg and d_p <= th.position_threshold_deg
    mode = RuleMode.COMBINED
    if th.azimuth_threshold_deg is not None:
        ok = ok and d_a <= th.azimuth_threshold_deg
        mode = RuleMode.AZIMUTH_STUDY
    return Verdict(d_h, d_a, d_p, ok, mode)


def validate_altitude_range(
    altitude_range: Tuple[float, float], context: SunPosition, th: Thresholds = Thresholds()
) -> Verdict:
    """Altitude-only verdict for an interval estimate; d_h is the gap to the interval (0 inside)."""
    lo, hi = sorted(altitude_range)
    if not (0.0 < lo and hi < 90.0):
        raise DomainError(f"altitude range must lie inside (0, 90), got [{lo}, {hi}]")
    if context.altitude_deg is None:
        raise ValidationImpossibleError("claimed-metadata altitude is missing")
    h_m = context.altitude_deg
    d_h = 0.0 if lo <= h_m <= hi else min(abs(lo - h_m), abs(hi - h_m))
    return Verdict(d_h, None, None, d_h <= th.altitude_threshold_deg, RuleMode.ALTITUDE_ONLY)
