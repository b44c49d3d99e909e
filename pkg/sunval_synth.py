#!/usr/bin/env python3
"""
sunval_synth.py - Synthetic object/shadow annotations from a known sun position.

A vertical object of height L stands on the ground at `base`; its shadow tip
lies at base - (L / tan h)·(sin(A - yaw), 0, cos(A - yaw)). The three points
are projected through the camera to give a ShadowAnnotation.

Noise draws are standard normals scaled by sigma, keyed by (seed, photo,
trial), so every sigma level reuses the same underlying draws.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import IntEnum
from typing import List, Optional, Sequence

import numpy as np

from sunval_angles import SunPosition
from sunval_camera import (
    CameraIntrinsics,
    CameraPose,
    PixelPoint,
    WorldPoint,
    in_frame,
    project,
    projection_matrix,
)
from sunval_ephemeris import ClaimedContext, sun_position_from_context
from sunval_errors import (
    DegenerateAnnotationError,
    DomainError,
    NoShadowError,
    ProjectionError,
    SceneInfeasibleError,
)
from sunval_shadow import ShadowAnnotation, solve_offsets_batch

log = logging.getLogger(__name__)

# Dataset I camera: 4032x3024 sensor, principal point at the centre.
DATASET1_FOCAL_PX = 3351.6
DATASET1_IMAGE_SIZE = (4032, 3024)
DATASET1_CAMERA_HEIGHT = 1.6
DATASET1_OBJECT_HEIGHT = 1.0
DATASET1_LATITUDE = 40.71
DATASET1_LONGITUDE = -74.0
DATASET1_START = datetime(2017, 3, 21, 9, 0, tzinfo=timezone(timedelta(hours=-4)))
DATASET1_STEP = timedelta(minutes=5)
DATASET1_FRAMES = 84

NOISE_DRAWS = 6  # tip x/y, base x/y, top x/y


class Stream(IntEnum):
    """Second SeedSequence key of every random stream. Never 0: SeedSequence drops trailing zeros."""

    NOISE = 1
    GENUINE = 2
    ATTACK_TIME = 3
    ATTACK_DATE = 4
    ATTACK_LATITUDE = 5


@dataclass(frozen=True)
class SceneSpec:
    intrinsics: CameraIntrinsics
    pose: CameraPose
    base_position: WorldPoint
    object_height: float = 1.0

    def __post_init__(self):
        if not (self.object_height > 0):
            raise DomainError(f"object_height must be > 0, got {self.object_height}")
        if not math.isclose(self.base_position.Y, -self.pose.height, rel_tol=0.0, abs_tol=1e-12):
            raise DomainError(
                f"base must lie on the ground plane Y={-self.pose.height}, got Y={self.base_position.Y}"
            )
        if self.base_position.Z <= 0:
            raise DomainError(f"base must be in front of the camera, got Z={self.base_position.Z}")

    @classmethod
    def at_distance(
        cls,
        intrinsics: CameraIntrinsics,
        pose: CameraPose,
        distance: float,
        object_height: float = 1.0,
    ) -> "SceneSpec":
        """Object footprint straight ahead of the camera at `distance`."""
        return cls(intrinsics, pose, WorldPoint.on_ground(0.0, distance, pose.height), object_height)

    @property
    def top_position(self) -> WorldPoint:
        b = self.base_position
        return WorldPoint(b.X, b.Y + self.object_height, b.Z)


@dataclass(frozen=True)
class NoiseSpec:
    sigma_px: float = 0.0
    seed: int = 0
    trials: int = 200

    def __post_init__(self):
        if not (self.sigma_px >= 0):
            raise DomainError(f"sigma_px must be >= 0, got {self.sigma_px}")
        if not (0 <= self.seed < 2 ** 64):
            raise DomainError(f"seed must be in range [0, 2**64), got {self.seed}")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class SyntheticFrame:
    frame_id: str
    context: ClaimedContext
    sun: SunPosition
    annotation: ShadowAnnotation


# ============================================================================
# 1) SCENE GEOMETRY
# ============================================================================

def shadow_tip_world(spec: SceneSpec, sun: SunPosition) -> WorldPoint:
    if sun.altitude_deg is None or sun.altitude_deg <= 0:
        raise NoShadowError(f"sun altitude {sun.altitude_deg} casts no shadow")
    if sun.azimuth_deg is None:
        raise DomainError("sun azimuth is required to place the shadow")
    if spec.pose.yaw_deg is None:
        raise DomainError("camera yaw is required to place the shadow")
    length = spec.object_height / math.tan(math.radians(sun.altitude_deg))
    rel = math.radians(sun.azimuth_deg - spec.pose.yaw_deg)
    b = spec.base_position
    return WorldPoint(b.X - length * math.sin(rel), b.Y, b.Z - length * math.cos(rel))


def synthesize_scene(spec: SceneSpec, sun: SunPosition, check_frame: bool = False) -> ShadowAnnotation:
    tip = shadow_tip_world(spec, sun)
    if tip.Z <= 0:
        raise SceneInfeasibleError(f"shadow tip lies behind the camera (Z={tip.Z:.4f})")
    P = projection_matrix(spec.intrinsics, spec.pose.pitch_deg)
    try:
        pixels = [project(P, p) for p in (tip, spec.base_position, spec.top_position)]
    except ProjectionError as exc:
        raise SceneInfeasibleError(str(exc)) from exc
    if check_frame:
        outside = [name for name, px in zip(("shadow_tip", "object_base", "object_top"), pixels)
                   if not in_frame(px, spec.intrinsics)]
        if outside:
            raise SceneInfeasibleError(f"outside the image: {', '.join(outside)}")
    try:
        return ShadowAnnotation(shadow_tip=pixels[0], object_base=pixels[1], object_top=pixels[2])
    except DegenerateAnnotationError as exc:
        raise SceneInfeasibleError(f"shadow too short to annotate: {exc}") from exc


# ============================================================================
# 2) NOISE
# ============================================================================

def stream_rng(seed: int, stream: Stream, *keys: int) -> np.random.Generator:
    """Generator keyed by [seed, stream, *keys]; each stream always uses the same number of keys."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(Stream(stream)), *(int(k) for k in keys)]))


def rng_for(seed: int, photo_index: int, trial_index: int) -> np.random.Generator:
    """Independent noise stream per (seed, photo, trial), whatever the iteration order."""
    return stream_rng(seed, Stream.NOISE, photo_index, trial_index)


def add_noise(
    ann: ShadowAnnotation, noise: NoiseSpec, trial_index: int, photo_index: int = 0
) -> ShadowAnnotation:
    if noise.sigma_px == 0:
        return ann
    dx = rng_for(noise.seed, photo_index, trial_index).standard_normal(NOISE_DRAWS) * noise.sigma_px

    def moved(pt: Optional[PixelPoint], i: int) -> Optional[PixelPoint]:
        if pt is None:
            return None
        return PixelPoint(pt.x + float(dx[i]), pt.y + float(dx[i + 1]))

    return ShadowAnnotation(moved(ann.shadow_tip, 0), moved(ann.object_base, 2), moved(ann.object_top, 4))


# ============================================================================
# 3) DATASET I
# ============================================================================

def dataset1_camera(pitch_deg: float = 0.0, yaw_deg: float = 0.0):
    intr = CameraIntrinsics.from_image(*DATASET1_IMAGE_SIZE, focal_px=DATASET1_FOCAL_PX)
    return intr, CameraPose(pitch_deg=pitch_deg, yaw_deg=yaw_deg, height=DATASET1_CAMERA_HEIGHT)


def dataset1_scene(distance_m: float = 10.0, pitch_deg: float = 0.0, yaw_deg: float = 0.0) -> SceneSpec:
    intr, pose = dataset1_camera(pitch_deg, yaw_deg)
    return SceneSpec.at_distance(intr, pose, distance_m, DATASET1_OBJECT_HEIGHT)


def dataset1_contexts() -> List[ClaimedContext]:
    return [
        ClaimedContext(DATASET1_START + i * DATASET1_STEP, DATASET1_LATITUDE, DATASET1_LONGITUDE)
        for i in range(DATASET1_FRAMES)
    ]


def frame_id(ctx: ClaimedContext) -> str:
    return ctx.timestamp.strftime("frame-%Y%m%d-%H%M")


def dataset1_frames(scene: Optional[SceneSpec] = None) -> List[SyntheticFrame]:
    """New York, 2017-03-21, one photo every 5 minutes from 09:00 (84 photos)."""
    scene = scene or dataset1_scene()
    frames = []
    for ctx in dataset1_contexts():
        sun = sun_position_from_context(ctx)
        frames.append(SyntheticFrame(frame_id(ctx), ctx, sun, synthesize_scene(scene, sun)))
    log.info("synthesized %d frames at %.1f m, pitch %.1f", len(frames), scene.base_position.Z,
             scene.pose.pitch_deg)
    return frames


# ============================================================================
# 4) NOISE STUDY
# ============================================================================

@dataclass(frozen=True)
class NoiseStudyRow:
    sigma_px: float
    mean_altitude_error: float
    mean_azimuth_error: float
    failures: int
    samples: int


def noise_study(
    scene: SceneSpec,
    frames: Sequence[SyntheticFrame],
    sigmas: Sequence[float],
    trials: int = 200,
    seed: int = 0,
) -> List[NoiseStudyRow]:
    """Mean absolute altitude/azimuth error per sigma; invalid trials are counted as failures."""
    NoiseSpec(0.0, seed, trials)
    for s in sigmas:
        NoiseSpec(s, seed, trials)
    intr = scene.intrinsics
    yaw = scene.pose.yaw_deg if scene.pose.yaw_deg is not None else 0.0

    # (frames, trials, 6) standard normals shared by every sigma
    draws = np.stack([
        np.stack([rng_for(seed, i, t).standard_normal(NOISE_DRAWS) for t in range(trials)])
        for i in range(len(frames))
    ])
    clean = np.array([
        [f.annotation.shadow_tip.x, f.annotation.shadow_tip.y,
         f.annotation.object_base.x, f.annotation.object_base.y,
         f.annotation.object_top.x, f.annotation.object_top.y]
        for f in frames
    ])
    true_alt = np.array([f.sun.altitude_deg for f in frames])[:, None]
    true_az = np.array([f.sun.azimuth_deg for f in frames])[:, None]

    rows = []
    for sigma in sigmas:
        pts = clean[:, None, :] + sigma * draws
        alt, az = solve_offsets_batch(
            pts[..., 0] - intr.u0, intr.v0 - pts[..., 1],
            pts[..., 2] - intr.u0, intr.v0 - pts[..., 3],
            intr.v0 - pts[..., 5],
            intr.focal_px, scene.pose.pitch_deg, yaw,
        )
        ok = np.isfinite(alt) & np.isfinite(az)
        alt_err = np.abs(alt - true_alt)[ok]
        az_diff = np.abs(az - true_az)[ok] % 360.0
        az_err = np.minimum(az_diff, 360.0 - az_diff)
        failures = int(ok.size - ok.sum())
        if failures:
            log.warning("sigma %.2f: %d of %d trials unsolvable", sigma, failures, ok.size)
        rows.append(NoiseStudyRow(
            sigma_px=float(sigma),
            mean_altitude_error=float(alt_err.mean()) if alt_err.size else float("nan"),
            mean_azimuth_error=float(az_err.mean()) if az_err.size else float("nan"),
            failures=failures,
            samples=int(ok.size),
        ))
    return rows
