#!/usr/bin/env python3
"""
sunval_preview.py - Downscaled PNG sketches of synthetic scenes (horizon, object, shadow).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Tuple

from PIL import Image, ImageDraw

from sunval_camera import CameraIntrinsics, PixelPoint, horizon_row
from sunval_shadow import ShadowAnnotation

log = logging.getLogger(__name__)

SKY = (170, 200, 235)
GROUND = (150, 140, 120)
OBJECT = (200, 40, 40)
SHADOW = (40, 40, 40)
MARK = (255, 255, 0)
MARK_RADIUS = 3


def _scaled(pt: PixelPoint, scale: float) -> Tuple[float, float]:
    return pt.x * scale, pt.y * scale


def render_scene(ann: ShadowAnnotation, intr: CameraIntrinsics, pitch_deg: float, scale: float = 0.25) -> Image.Image:
    """RGB sketch of the annotation at `scale` times the image size. Points off the frame are clipped."""
    if not (scale > 0):
        raise ValueError(f"scale must be > 0, got {scale}")
    width, height = intr.image_size
    size = (max(1, round(width * scale)), max(1, round(height * scale)))
    img = Image.new("RGB", size, GROUND)
    draw = ImageDraw.Draw(img)

    horizon = horizon_row(intr, pitch_deg) * scale
    if horizon > 0:
        draw.rectangle([0, 0, size[0], min(horizon, size[1])], fill=SKY)

    base = _scaled(ann.object_base, scale)
    draw.line([_scaled(ann.shadow_tip, scale), base], fill=SHADOW, width=3)
    if ann.object_top is not None:
        draw.line([base, _scaled(ann.object_top, scale)], fill=OBJECT, width=3)

    for pt in (ann.shadow_tip, ann.object_base, ann.object_top):
        if pt is None:
            continue
        x, y = _scaled(pt, scale)
        draw.ellipse([x - MARK_RADIUS, y - MARK_RADIUS, x + MARK_RADIUS, y + MARK_RADIUS], outline=MARK)
    return img


def save_preview(img: Image.Image, directory: Path, frame_id: str) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{frame_id}.png"
    img.save(path, format="PNG")
    log.debug("preview %s", path)
    return path
