#!/usr/bin/env python3
"""
sunval_camera.py - Pinhole camera model: intrinsics, pose, P = K·R·[I|0], projection.

World frame is centred on the camera: X right, Y up, Z along the level image
direction; the ground plane is Y = -h_c. The rotation is a pure pitch about X
(no roll, zero skew, square pixels).

Public pixel coordinates are standard image coordinates (origin top-left,
y downward). The solver formulas work on centred y-up offsets; the only
conversion site is principal_offsets() / from_offsets().
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from sunval_angles import normalize_degrees
from sunval_errors import DomainError, ProjectionError

PITCH_LIMIT_DEG = 45.0
DEFAULT_CAMERA_HEIGHT = 1.0


# ============================================================================
# 1) VALUE TYPES
# ============================================================================

@dataclass(frozen=True)
class PixelPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"pixel coordinates must be finite, got ({self.x}, {self.y})")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class WorldPoint:
    X: float
    Y: float
    Z: float

    @classmethod
    def on_ground(cls, X: float, Z: float, camera_height: float) -> "WorldPoint":
        return cls(X, -camera_height, Z)

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=float)

    def homogeneous(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z, 1.0], dtype=float)


@dataclass(frozen=True)
class CameraIntrinsics:
    focal_px: float
    image_size: Tuple[int, int]
    principal_point: Optional[Tuple[float, float]] = field(default=None)

    def __post_init__(self):
        if not (self.focal_px > 0 and math.isfinite(self.focal_px)):
            raise DomainError(f"focal_px must be > 0, got {self.focal_px}")
        width, height = self.image_size
        if int(width) != width or int(height) != height or width <= 0 or height <= 0:
            raise DomainError(f"image_size must be positive integers, got {self.image_size}")
        object.__setattr__(self, "image_size", (int(width), int(height)))
        if self.principal_point is None:
            object.__setattr__(self, "principal_point", (width / 2.0, height / 2.0))
        else:
            u0, v0 = self.principal_point
            object.__setattr__(self, "principal_point", (float(u0), float(v0)))

    @classmethod
    def from_image(
        cls,
        width: int,
        height: int,
        focal_px: float,
        principal_point: Optional[Tuple[float, float]] = None,
    ) -> "CameraIntrinsics":
        return cls(focal_px=focal_px, image_size=(width, height), principal_point=principal_point)

    @property
    def u0(self) -> float:
        return self.principal_point[0]

    @property
    def v0(self) -> float:
        return self.principal_point[1]

    def matrix(self) -> np.ndarray:
        f = self.focal_px
        return np.array([[f, 0.0, self.u0], [0.0, f, self.v0], [0.0, 0.0, 1.0]])

    def scaled(self, s: float) -> "CameraIntrinsics":
        """Same camera with focal length and principal point scaled by s (image size kept)."""
        return CameraIntrinsics(self.focal_px * s, self.image_size, (self.u0 * s, self.v0 * s))


def check_pitch(pitch_deg: float) -> float:
    if not (-PITCH_LIMIT_DEG < pitch_deg < PITCH_LIMIT_DEG):
        raise DomainError(f"pitch_deg must be in range (-45, 45), got {pitch_deg}")
    return float(pitch_deg)


@dataclass(frozen=True)
class CameraPose:
    """Camera orientation. yaw_deg=None means the compass heading is unknown."""

    pitch_deg: float
    yaw_deg: Optional[float] = 0.0
    height: float = DEFAULT_CAMERA_HEIGHT

    def __post_init__(self):
        check_pitch(self.pitch_deg)
        if not (self.height > 0):
            raise DomainError(f"camera height must be > 0, got {self.height}")
        if self.yaw_deg is not None:
            if not math.isfinite(self.yaw_deg):
                raise DomainError(f"yaw_deg must be finite, got {self.yaw_deg}")
            object.__setattr__(self, "yaw_deg", normalize_degrees(float(self.yaw_deg)))


# ============================================================================
# 2) MATRICES AND PROJECTION
# ============================================================================

def rotation_matrix(pitch_deg: float) -> np.ndarray:
    t = math.radians(check_pitch(pitch_deg))
    c, s = math.cos(t), math.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def projection_matrix(intr: CameraIntrinsics, pitch_deg: float) -> np.ndarray:
    R = rotation_matrix(pitch_deg)
    return intr.matrix() @ R @ np.hstack([np.eye(3), np.zeros((3, 1))])


def _principal_point_of(P: np.ndarray) -> Tuple[float, float]:
    # Rows of K·R are (f·r0 + u0·r2, f·r1 + v0·r2, r2) with orthonormal r_i.
    r2 = P[2, :3]
    n2 = float(r2 @ r2)
    if n2 == 0.0:
        raise ProjectionError("projection matrix has a zero depth row")
    return float(P[0, :3] @ r2) / n2, float(P[1, :3] @ r2) / n2


PointLike = Union[WorldPoint, Sequence[float], np.ndarray]


def _as_euclidean(pt: PointLike) -> np.ndarray:
    if isinstance(pt, WorldPoint):
        return pt.as_array()
    arr = np.asarray(pt, dtype=float)
    if arr.shape == (3,):
        return arr
    if arr.shape == (4,):
        if arr[3] == 0.0:
            raise ProjectionError("point at infinity has no pixel position")
        return arr[:3] / arr[3]
    raise ProjectionError(f"expected a 3- or 4-vector, got shape {arr.shape}")


def project(P: np.ndarray, pt: PointLike) -> PixelPoint:
    X = _as_euclidean(pt)
    u, v, w = P @ np.append(X, 1.0)
    if w <= 0.0:
        raise ProjectionError(f"point {tuple(X)} is at or behind the camera plane (depth {w:.6g})")
    _, v0 = _principal_point_of(P)
    # P·X lives in a y-up frame; flip about v0 into y-down pixels.
    return PixelPoint(float(u / w), float(2.0 * v0 - v / w))


# ============================================================================
# 3) PIXEL FRAME HELPERS
# ============================================================================

def principal_offsets(pt: PixelPoint, intr: CameraIntrinsics) -> Tuple[float, float]:
    return pt.x - intr.u0, intr.v0 - pt.y


def from_offsets(x_off: float, y_off: float, intr: CameraIntrinsics) -> PixelPoint:
    return PixelPoint(x_off + intr.u0, intr.v0 - y_off)


def in_frame(pt: PixelPoint, intr: CameraIntrinsics) -> bool:
    width, height = intr.image_size
    return 0.0 <= pt.x < width and 0.0 <= pt.y < height


def horizon_row(intr: CameraIntrinsics, pitch_deg: float) -> float:
    """Pixel row of the level horizon (y' = -f·tanθ)."""
    t = math.radians(check_pitch(pitch_deg))
    return intr.v0 + intr.focal_px * math.tan(t)
