import math

import numpy as np
import pytest

from conftest import make_scene
from sunval_camera import CameraIntrinsics, CameraPose, WorldPoint
from sunval_errors import DomainError, NoShadowError, SceneInfeasibleError
from sunval_angles import SunPosition
from sunval_shadow import infer_sun_position
from sunval_synth import (
    DATASET1_FRAMES,
    NoiseSpec,
    SceneSpec,
    Stream,
    add_noise,
    dataset1_frames,
    dataset1_scene,
    noise_study,
    rng_for,
    shadow_tip_world,
    stream_rng,
    synthesize_scene,
)
from sunval_validator import validate


def _angle_diff(a, b):
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def test_shadow_tip_away_from_camera(scene_5m):
    tip = shadow_tip_world(scene_5m, SunPosition(180.0, 45.0))
    assert tip.X == pytest.approx(0.0, abs=1e-12)
    assert tip.Y == -1.6
    assert tip.Z == pytest.approx(6.0)


@pytest.mark.parametrize("altitude", [10.0, 45.0, 70.0, 89.9])
def test_shadow_length_law(scene_5m, altitude):
    tip = shadow_tip_world(scene_5m, SunPosition(123.0, altitude))
    b = scene_5m.base_position
    length = math.hypot(tip.X - b.X, tip.Z - b.Z)
    assert length * math.tan(math.radians(altitude)) == pytest.approx(scene_5m.object_height)


def test_no_shadow_without_sun(scene_5m):
    for sun in (SunPosition(180.0, 0.0), SunPosition(180.0, -10.0), SunPosition(180.0, None)):
        with pytest.raises(NoShadowError):
            shadow_tip_world(scene_5m, sun)
    with pytest.raises(DomainError):
        shadow_tip_world(scene_5m, SunPosition(None, 30.0))


def test_scene_validation():
    intr = CameraIntrinsics.from_image(4032, 3024, focal_px=3351.6)
    pose = CameraPose(0.0, 0.0, 1.6)
    with pytest.raises(DomainError):
        SceneSpec(intr, pose, WorldPoint(0.0, -1.0, 5.0))
    with pytest.raises(DomainError):
        SceneSpec(intr, pose, WorldPoint(0.0, -1.6, -5.0))
    with pytest.raises(DomainError):
        SceneSpec.at_distance(intr, pose, 5.0, object_height=0.0)
    for bad in ({"sigma_px": -1.0}, {"seed": -1}, {"trials": 0}):
        with pytest.raises(DomainError):
            NoiseSpec(**bad)


def test_shadow_behind_camera_is_infeasible():
    scene = make_scene(distance=1.0)
    with pytest.raises(SceneInfeasibleError):
        synthesize_scene(scene, SunPosition(0.0, 10.0))


def test_frame_check_reports_points_outside_image():
    scene = make_scene(distance=2.0, focal=420.0, size=(640, 480))
    sun = SunPosition(180.0, 40.0)
    synthesize_scene(scene, sun)
    with pytest.raises(SceneInfeasibleError, match="object_base"):
        synthesize_scene(scene, sun, check_frame=True)


def test_dataset1_grid():
    frames = dataset1_frames(dataset1_scene(5.0))
    assert len(frames) == DATASET1_FRAMES == 84
    assert frames[0].frame_id == "frame-20170321-0900"
    assert frames[-1].frame_id == "frame-20170321-1555"
    assert len({f.frame_id for f in frames}) == 84


@pytest.mark.parametrize("pitch", [0.0, 20.0])
def test_dataset1_zero_noise_round_trip(pitch):
    scene = dataset1_scene(5.0, pitch_deg=pitch)
    worst = 0.0
    for frame in dataset1_frames(scene):
        got = infer_sun_position(frame.annotation, scene.intrinsics, scene.pose)
        worst = max(worst, abs(got.altitude_deg - frame.sun.altitude_deg),
                    _angle_diff(got.azimuth_deg, frame.sun.azimuth_deg))
    assert worst < 1e-6


def test_noise_is_deterministic(scene_5m):
    clean = synthesize_scene(scene_5m, SunPosition(200.0, 40.0))
    noise = NoiseSpec(2.0, seed=11)
    assert add_noise(clean, noise, trial_index=3) == add_noise(clean, noise, trial_index=3)
    assert add_noise(clean, noise, trial_index=3) != add_noise(clean, noise, trial_index=4)
    assert add_noise(clean, noise, 3, photo_index=1) != add_noise(clean, noise, 3, photo_index=2)
    assert add_noise(clean, NoiseSpec(0.0, seed=11), trial_index=3) is clean


def test_noise_scales_shared_draws(scene_5m):
    clean = synthesize_scene(scene_5m, SunPosition(200.0, 40.0))
    one = add_noise(clean, NoiseSpec(1.0, seed=5), trial_index=0)
    three = add_noise(clean, NoiseSpec(3.0, seed=5), trial_index=0)
    assert three.shadow_tip.x - clean.shadow_tip.x == pytest.approx(3.0 * (one.shadow_tip.x - clean.shadow_tip.x))
    assert three.object_top.y - clean.object_top.y == pytest.approx(3.0 * (one.object_top.y - clean.object_top.y))


def test_rng_streams_independent_of_order():
    forward = [rng_for(0, 2, t).standard_normal(6) for t in range(5)]
    backward = [rng_for(0, 2, t).standard_normal(6) for t in reversed(range(5))][::-1]
    np.testing.assert_array_equal(np.stack(forward), np.stack(backward))


def test_streams_never_share_draws():
    gens = [
        rng_for(0, 0, 5),
        rng_for(0, 5, 0),
        rng_for(0, 1, 2),
        stream_rng(0, Stream.GENUINE, 5),
        stream_rng(0, Stream.GENUINE, 0),
        stream_rng(0, Stream.ATTACK_TIME, 2, 0),
        stream_rng(0, Stream.ATTACK_TIME, 0, 2),
        stream_rng(0, Stream.ATTACK_DATE, 2, 0),
        stream_rng(0, Stream.ATTACK_LATITUDE, 2, 0),
        stream_rng(1, Stream.GENUINE, 5),
    ]
    draws = {tuple(g.standard_normal(4)) for g in gens}
    assert len(draws) == len(gens)
    # SeedSequence drops trailing zeros
    with pytest.raises(ValueError):
        stream_rng(0, 0, 1)


def test_one_pixel_noise_stays_within_position_threshold():
    scene = dataset1_scene(10.0)
    frame = dataset1_frames(scene)[36]
    noise = NoiseSpec(1.0, seed=3, trials=100)
    accepted = 0
    for t in range(noise.trials):
        noisy = add_noise(frame.annotation, noise, trial_index=t, photo_index=36)
        shadow = infer_sun_position(noisy, scene.intrinsics, scene.pose)
        accepted += validate(shadow, frame.sun).d_p <= 9.4
    assert accepted >= 95


def test_noise_study_zero_sigma_is_exact():
    scene = dataset1_scene(10.0)
    frames = dataset1_frames(scene)[::12]
    (row,) = noise_study(scene, frames, [0.0], trials=5)
    assert row.samples == len(frames) * 5
    assert row.failures == 0
    assert row.mean_altitude_error < 1e-6
    assert row.mean_azimuth_error < 1e-6


@pytest.mark.slow
def test_noise_study_error_grows_with_sigma():
    scene = dataset1_scene(10.0)
    rows = noise_study(scene, dataset1_frames(scene), [0.0, 1.0, 2.0, 3.0, 4.0], trials=200, seed=0)
    alt = [r.mean_altitude_error for r in rows]
    az = [r.mean_azimuth_error for r in rows]
    assert all(b >= a for a, b in zip(alt, alt[1:]))
    assert all(b >= a for a, b in zip(az, az[1:]))
    assert all(a <= z for a, z in zip(alt[1:], az[1:]))
    assert alt[-1] == pytest.approx(1.91, abs=0.4)
    assert az[-1] == pytest.approx(2.44, abs=0.5)


@pytest.mark.slow
def test_noise_study_tilted_camera():
    rows = []
    for pitch in (0.0, 10.0, 20.0):
        scene = dataset1_scene(5.0, pitch_deg=pitch)
        rows += noise_study(scene, dataset1_frames(scene), [4.0], trials=200)
    for a in rows:
        for b in rows:
            assert abs(a.mean_altitude_error - b.mean_altitude_error) < 0.5
            assert abs(a.mean_azimuth_error - b.mean_azimuth_error) < 0.5
