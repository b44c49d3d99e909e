import pytest
from PIL import Image

from sunval_preview import GROUND, SKY, render_scene, save_preview
from sunval_angles import SunPosition
from sunval_synth import synthesize_scene


def test_render_scene_layout(scene_5m):
    ann = synthesize_scene(scene_5m, SunPosition(200.0, 40.0))
    img = render_scene(ann, scene_5m.intrinsics, scene_5m.pose.pitch_deg)
    assert img.size == (1008, 756)
    assert img.mode == "RGB"
    # level camera: horizon through the middle row
    assert img.getpixel((5, 5)) == SKY
    assert img.getpixel((5, 750)) == GROUND
    base = (round(ann.object_base.x * 0.25), round(ann.object_base.y * 0.25))
    assert img.getpixel(base) != GROUND


def test_render_scene_without_top(scene_5m, tmp_path):
    ann = synthesize_scene(scene_5m, SunPosition(200.0, 40.0))
    partial = type(ann)(ann.shadow_tip, ann.object_base)
    img = render_scene(partial, scene_5m.intrinsics, 0.0, scale=0.1)
    assert img.size == (403, 302)
    path = save_preview(img, tmp_path / "previews", "frame-0001")
    assert path.name == "frame-0001.png"
    with Image.open(path) as back:
        assert back.size == (403, 302)


def test_render_scene_rejects_bad_scale(scene_5m):
    ann = synthesize_scene(scene_5m, SunPosition(200.0, 40.0))
    with pytest.raises(ValueError):
        render_scene(ann, scene_5m.intrinsics, 0.0, scale=0.0)
