#!/usr/bin/env python3
"""
sunval_shadow.py - Shadow-inferred sun position from one vertical object and its shadow.

Inputs are three annotated pixels: the shadow tip (X1), the object's footprint
(X2) and, optionally, the object's top (X3). Tip and footprint are lifted onto
the ground plane Y = -h_c; the top shares the footprint's X and Z. Altitude is
the angle at the tip between the footprint and the top; azimuth is the compass
bearing of the tip -> footprint direction, i.e. the direction towards the sun.

The closed forms below work on centred y-up offsets (x' = x - u0, y' = v0 - y).
The m-term helpers use plain arithmetic so they accept floats or numpy arrays.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from sunval_angles import SunPosition, normalize_degrees
from sunval_camera import (
    CameraIntrinsics,
    CameraPose,
    PixelPoint,
    WorldPoint,
    check_pitch,
    principal_offsets,
)
from sunval_errors import (
    DegenerateAnnotationError,
    DomainError,
    InconsistentAnnotationError,
    InsufficientAnnotationError,
    SunBelowHorizonError,
    SunvalError,
)

log = logging.getLogger(__name__)

# |denominator| below DEGENERATE_EPS * f counts as zero.
DEGENERATE_EPS = 1e-9


@dataclass(frozen=True)
class ShadowAnnotation:
    shadow_tip: PixelPoint
    object_base: PixelPoint
    object_top: Optional[PixelPoint] = None

    def __post_init__(self):
        if self.shadow_tip == self.object_base:
            raise DegenerateAnnotationError("shadow_tip and object_base coincide")
        if self.object_top is not None and self.object_top == self.object_base:
            raise DegenerateAnnotationError("object_top and object_base coincide (zero-height object)")


def _trig(pitch_deg: float) -> Tuple[float, float]:
    t = math.radians(check_pitch(pitch_deg))
    return math.cos(t), math.sin(t)


def _check_height(h_c: float) -> float:
    if not (h_c > 0):
        raise DomainError(f"camera height must be > 0, got {h_c}")
    return float(h_c)


# ============================================================================
# 1) BACK-PROJECTION
# ============================================================================

def recover_ground_point(
    pt: PixelPoint, intr: CameraIntrinsics, pitch_deg: float, h_c: float = 1.0
) -> WorldPoint:
    h = _check_height(h_c)
    c, s = _trig(pitch_deg)
    f = intr.focal_px
    x_off, y_off = principal_offsets(pt, intr)
    tan_t = s / c
    den = y_off + f * tan_t
    if abs(den) < DEGENERATE_EPS * f:
        raise DegenerateAnnotationError(f"pixel ({pt.x:.3f}, {pt.y:.3f}) lies on the horizon line")
    if den > 0:
        # above the horizon: the ground ray meets the plane behind the camera
        raise InconsistentAnnotationError(
            f"pixel ({pt.x:.3f}, {pt.y:.3f}) is above the horizon; no ground point in front of the camera"
        )
    X = -h * x_off / (c * den)
    Z = h * (y_off * tan_t - f) / den
    if Z <= 0:
        raise InconsistentAnnotationError(f"recovered ground point lies behind the camera (Z={Z:.6g})")
    return WorldPoint(X, -h, Z)


def recover_top_point(
    top: PixelPoint, base_world: WorldPoint, intr: CameraIntrinsics, pitch_deg: float
) -> WorldPoint:
    c, s = _trig(pitch_deg)
    f = intr.focal_px
    _, y3 = principal_offsets(top, intr)
    den = f * c - y3 * s
    if abs(den) < DEGENERATE_EPS * f:
        raise DegenerateAnnotationError(f"object top ({top.x:.3f}, {top.y:.3f}) maps to infinity")
    if den < 0:
        raise InconsistentAnnotationError(f"object top ({top.x:.3f}, {top.y:.3f}) lies behind the camera")
    Y = base_world.Z * (f * s + y3 * c) / den
    return WorldPoint(base_world.X, Y, base_world.Z)


def object_height(
    ann: ShadowAnnotation, intr: CameraIntrinsics, pitch_deg: float, h_c: float = 1.0
) -> float:
    if ann.object_top is None:
        raise InsufficientAnnotationError("object_top is required to recover the object height")
    base = recover_ground_point(ann.object_base, intr, pitch_deg, h_c)
    top = recover_top_point(ann.object_top, base, intr, pitch_deg)
    return top.Y - base.Y


# ============================================================================
# 2) CLOSED-FORM TERMS
# ============================================================================

def altitude_terms(x1, y1, x2, y2, y3, f, c, s):
    """m_a, m_b, m_c, m_d for tip (x1, y1), base (x2, y2) and top row y3 (centred offsets).

    |X1X2|^2 ∝ m_a / m_b and (Y3 - Y1)^2 ∝ m_c / m_d, with the same h_c factor.
    """
    tan_t = s / c
    m_a = (f * (x1 - x2) * s + (x1 * y2 - x2 * y1) * c) ** 2 + f ** 2 * (y2 - y1) ** 2
    m_b = c ** 4 * (y1 + f * tan_t) ** 2 * (y2 + f * tan_t) ** 2
    m_c = f ** 2 * (y2 - y3) ** 2
    m_d = (f * s + y2 * c) ** 2 * (f * c - y3 * s) ** 2
    return m_a, m_b, m_c, m_d


def azimuth_terms(x1, y1, x2, y2, f, c, s):
    """(m_a', m_b'): tip -> base ground vector along the image direction and to its right.

    Both share the positive factor h_c / (cos^2θ·D1·D2), so atan2(m_b', m_a')
    is the clockwise angle from the image direction.
    """
    m_a = f * (y2 - y1)
    m_b = f * (x1 - x2) * s + (x1 * y2 - x2 * y1) * c
    return m_a, m_b


# ============================================================================
# 3) SUN POSITION
# ============================================================================

def infer_altitude(ann: ShadowAnnotation, intr: CameraIntrinsics, pitch_deg: float) -> float:
    if ann.object_top is None:
        raise InsufficientAnnotationError("object_top is required for the altitude angle")
    c, s = _trig(pitch_deg)
    f = intr.focal_px
    # Lifting validates that both ground points sit in front of the camera.
    recover_ground_point(ann.shadow_tip, intr, pitch_deg)
    base = recover_ground_point(ann.object_base, intr, pitch_deg)
    top = recover_top_point(ann.object_top, base, intr, pitch_deg)
    if top.Y < base.Y:
        raise InconsistentAnnotationError("object top lies below the ground plane")

    x1, y1 = principal_offsets(ann.shadow_tip, intr)
    x2, y2 = principal_offsets(ann.object_base, intr)
    _, y3 = principal_offsets(ann.object_top, intr)
    m_a, m_b, m_c, m_d = altitude_terms(x1, y1, x2, y2, y3, f, c, s)
    if m_a == 0.0 and m_d == 0.0:
        raise DegenerateAnnotationError("altitude terms vanish")
    total = m_a * m_d + m_b * m_c
    if not total > 0.0:
        raise DegenerateAnnotationError("altitude terms vanish")
    h = math.degrees(math.acos(math.sqrt(m_a * m_d / total)))
    if not (0.0 < h < 90.0):
        raise SunBelowHorizonError(f"shadow-inferred altitude {h:.6f} is outside (0, 90)")
    return h


def infer_azimuth(ann: ShadowAnnotation, intr: CameraIntrinsics, pose: CameraPose) -> float:
    if pose.yaw_deg is None:
        raise InsufficientAnnotationError("camera yaw is required for the azimuth angle")
    c, s = _trig(pose.pitch_deg)
    f = intr.focal_px
    recover_ground_point(ann.shadow_tip, intr, pose.pitch_deg, pose.height)
    recover_ground_point(ann.object_base, intr, pose.pitch_deg, pose.height)

    x1, y1 = principal_offsets(ann.shadow_tip, intr)
    x2, y2 = principal_offsets(ann.object_base, intr)
    m_a, m_b = azimuth_terms(x1, y1, x2, y2, f, c, s)
    if math.hypot(m_a, m_b) <= DEGENERATE_EPS * f * f:
        raise DegenerateAnnotationError("shadow has zero length on the ground")
    clockwise = math.degrees(math.atan2(m_b, m_a))
    return normalize_degrees(pose.yaw_deg + clockwise)


def infer_sun_position(ann: ShadowAnnotation, intr: CameraIntrinsics, pose: CameraPose) -> SunPosition:
    altitude = infer_altitude(ann, intr, pose.pitch_deg) if ann.object_top is not None else None
    azimuth = infer_azimuth(ann, intr, pose) if pose.yaw_deg is not None else None
    return SunPosition(azimuth_deg=azimuth, altitude_deg=altitude)


def infer_batch(
    annotations: Sequence[ShadowAnnotation],
    intr: CameraIntrinsics,
    poses: Sequence[CameraPose],
) -> List[Union[SunPosition, SunvalError]]:
    if len(annotations) != len(poses):
        raise DomainError(f"got {len(annotations)} annotations but {len(poses)} poses")
    out: List[Union[SunPosition, SunvalError]] = []
    for i, (ann, pose) in enumerate(zip(annotations, poses)):
        try:
            out.append(infer_sun_position(ann, intr, pose))
        except SunvalError as exc:
            log.debug("annotation %d rejected: %s", i, exc)
            out.append(exc)
    return out


def altitude_range(
    ann: ShadowAnnotation,
    intr: CameraIntrinsics,
    focal_range: Tuple[float, float],
    pitch_range: Tuple[float, float],
    steps: int = 21,
) -> Tuple[float, float]:
    """Altitude interval attainable when focal length and pitch are only known as ranges.

    Grid points where the geometry degenerates are skipped.
    """
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps}")
    f_lo, f_hi = sorted(focal_range)
    p_lo, p_hi = sorted(pitch_range)
    if f_lo <= 0:
        raise DomainError(f"focal range must be positive, got {focal_range}")
    check_pitch(p_lo)
    check_pitch(p_hi)

    found: List[float] = []
    for f in np.linspace(f_lo, f_hi, steps):
        trial = dataclasses.replace(intr, focal_px=float(f))
        for pitch in np.linspace(p_lo, p_hi, steps):
            try:
                found.append(infer_altitude(ann, trial, float(pitch)))
            except SunvalError:
                continue
    if not found:
        raise DegenerateAnnotationError("no focal/pitch combination in range yields an altitude")
    return min(found), max(found)


# ============================================================================
# 4) VECTORIZED KERNEL (noise studies)
# ============================================================================

def solve_offsets_batch(
    x1: np.ndarray,
    y1: np.ndarray,
    x2: np.ndarray,
    y2: np.ndarray,
    y3: np.ndarray,
    focal_px: float,
    pitch_deg: float,
    yaw_deg: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """(altitude, azimuth) arrays in degrees from centred offsets; NaN where a trial is invalid.

    Applies the same validity rules as infer_altitude/infer_azimuth.
    """
    c, s = _trig(pitch_deg)
    f = float(focal_px)
    tan_t = s / c
    eps = DEGENERATE_EPS * f
    d1 = y1 + f * tan_t
    d2 = y2 + f * tan_t
    den3 = f * c - y3 * s
    ground_ok = (d1 < -eps) & (d2 < -eps)
    # world coordinates below are in the h_c = 1 frame (ground at Y = -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = (y1 * tan_t - f) / d1
        z2 = (y2 * tan_t - f) / d2
        ground_ok &= (z1 > 0) & (z2 > 0)
        top_y = z2 * (f * s + y3 * c) / den3
        top_ok = ground_ok & (den3 > eps) & (top_y >= -1.0)

        m_a, m_b, m_c, m_d = altitude_terms(x1, y1, x2, y2, y3, f, c, s)
        total = m_a * m_d + m_b * m_c
        alt = np.degrees(np.arccos(np.sqrt(m_a * m_d / total)))
    alt_ok = top_ok & (total > 0) & (alt > 0) & (alt < 90)
    alt = np.where(alt_ok, alt, np.nan)

    am_a, am_b = azimuth_terms(x1, y1, x2, y2, f, c, s)
    az_ok = ground_ok & (np.hypot(am_a, am_b) > eps * f)
    az = np.mod(yaw_deg + np.degrees(np.arctan2(am_b, am_a)), 360.0)
    az = np.where(az_ok, az, np.nan)
    return alt, az
