import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sunval_camera as cam
from sunval_errors import DomainError, ProjectionError


def test_rotation_identity_and_range():
    np.testing.assert_allclose(cam.rotation_matrix(0.0), np.eye(3), atol=1e-15)
    for bad in (45.0, -45.0, 90.0):
        with pytest.raises(DomainError):
            cam.rotation_matrix(bad)
    # range errors stay ValueErrors for callers
    with pytest.raises(ValueError):
        cam.check_pitch(60.0)


@given(st.floats(min_value=-44.9, max_value=44.9))
def test_rotation_is_orthonormal(pitch):
    R = cam.rotation_matrix(pitch)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rotation_entries_at_20_degrees():
    c, s = math.cos(math.radians(20)), math.sin(math.radians(20))
    np.testing.assert_allclose(cam.rotation_matrix(20.0), [[1, 0, 0], [0, c, -s], [0, s, c]], atol=1e-15)


def test_projection_matrix_closed_forms():
    intr = cam.CameraIntrinsics.from_image(4032, 3024, focal_px=3351.6)
    assert intr.principal_point == (2016.0, 1512.0)
    f, u0, v0 = 3351.6, 2016.0, 1512.0

    np.testing.assert_allclose(
        cam.projection_matrix(intr, 0.0), [[f, 0, u0, 0], [0, f, v0, 0], [0, 0, 1, 0]], atol=1e-12
    )

    c, s = math.cos(math.radians(10)), math.sin(math.radians(10))
    expected = [
        [f, u0 * s, u0 * c, 0],
        [0, f * c + v0 * s, -f * s + v0 * c, 0],
        [0, s, c, 0],
    ]
    P = cam.projection_matrix(intr, 10.0)
    np.testing.assert_allclose(P, expected, rtol=1e-12)
    np.testing.assert_allclose(P[2], [0, s, c, 0], atol=1e-15)


def test_projection_converges_to_level_form():
    intr = cam.CameraIntrinsics.from_image(4032, 3024, focal_px=3351.6)
    np.testing.assert_allclose(cam.projection_matrix(intr, 1e-9), cam.projection_matrix(intr, 0.0), atol=1e-5)


def test_project_examples(unit_camera):
    P = cam.projection_matrix(unit_camera, 0.0)
    assert cam.project(P, cam.WorldPoint(0, 0, 7)) == cam.PixelPoint(1000.0, 500.0)
    px = cam.project(P, cam.WorldPoint(0, -1, 5))
    assert px.x == pytest.approx(1000.0)
    assert px.y == pytest.approx(700.0)
    # homogeneous input
    px_h = cam.project(P, [0.0, -2.0, 10.0, 2.0])
    assert px_h.y == pytest.approx(700.0)


def test_project_behind_camera_raises(unit_camera):
    P = cam.projection_matrix(unit_camera, 0.0)
    with pytest.raises(ProjectionError):
        cam.project(P, cam.WorldPoint(0, -1, -5))
    with pytest.raises(ProjectionError):
        cam.project(P, cam.WorldPoint(1, 1, 0))
    with pytest.raises(ProjectionError):
        cam.project(P, [0.0, 0.0, 1.0, 0.0])


@settings(max_examples=50)
@given(
    x=st.floats(min_value=-20, max_value=20),
    z=st.floats(min_value=0.5, max_value=50),
    w=st.floats(min_value=0.1, max_value=100),
    pitch=st.floats(min_value=-30, max_value=30),
)
def test_project_ignores_homogeneous_scale(x, z, w, pitch):
    intr = cam.CameraIntrinsics.from_image(4032, 3024, focal_px=3351.6)
    P = cam.projection_matrix(intr, pitch)
    pt = cam.WorldPoint(x, -1.6, z)
    if P[2] @ pt.homogeneous() <= 0:
        return
    a = cam.project(P, pt)
    b = cam.project(P, pt.homogeneous() * w)
    assert a.x == pytest.approx(b.x, abs=1e-6)
    assert a.y == pytest.approx(b.y, abs=1e-6)


@given(x=st.floats(min_value=-50, max_value=50), z=st.floats(min_value=0.01, max_value=1000))
def test_level_ground_points_land_below_principal_point(x, z):
    intr = cam.CameraIntrinsics.from_image(4032, 3024, focal_px=3351.6)
    px = cam.project(cam.projection_matrix(intr, 0.0), cam.WorldPoint.on_ground(x, z, 1.6))
    assert px.y > intr.v0


def test_pixel_frame_helpers(unit_camera):
    pt = cam.PixelPoint(1200.0, 300.0)
    assert cam.principal_offsets(pt, unit_camera) == (200.0, 200.0)
    assert cam.from_offsets(200.0, 200.0, unit_camera) == pt
    assert cam.in_frame(pt, unit_camera)
    assert not cam.in_frame(cam.PixelPoint(-1.0, 10.0), unit_camera)
    assert not cam.in_frame(cam.PixelPoint(10.0, 1000.0), unit_camera)
    assert cam.horizon_row(unit_camera, 0.0) == 500.0
    assert cam.horizon_row(unit_camera, 45.0 - 1e-9) == pytest.approx(1500.0, abs=1e-4)


def test_intrinsics_validation_and_scaling():
    with pytest.raises(DomainError):
        cam.CameraIntrinsics(0.0, (640, 480))
    with pytest.raises(DomainError):
        cam.CameraIntrinsics(500.0, (640, 0))
    intr = cam.CameraIntrinsics(500.0, (640, 480), (300.0, 250.0))
    assert (intr.u0, intr.v0) == (300.0, 250.0)
    scaled = intr.scaled(2.0)
    assert scaled.focal_px == 1000.0
    assert scaled.principal_point == (600.0, 500.0)
    assert scaled.image_size == (640, 480)


def test_pose_normalizes_yaw():
    assert cam.CameraPose(0.0, yaw_deg=-30.0).yaw_deg == 330.0
    assert cam.CameraPose(0.0, yaw_deg=720.0).yaw_deg == 0.0
    assert cam.CameraPose(0.0, yaw_deg=None).yaw_deg is None
    with pytest.raises(DomainError):
        cam.CameraPose(0.0, height=0.0)
    with pytest.raises(DomainError):
        cam.PixelPoint(float("nan"), 0.0)
