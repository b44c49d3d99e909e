import pytest

from sunval_camera import CameraIntrinsics, CameraPose
from sunval_synth import SceneSpec, dataset1_scene


@pytest.fixture
def unit_camera():
    """f=1000 with the principal point at (1000, 500)."""
    return CameraIntrinsics.from_image(2000, 1000, focal_px=1000.0)


@pytest.fixture
def scene_5m():
    return dataset1_scene(distance_m=5.0)


def make_scene(pitch=0.0, yaw=0.0, distance=5.0, camera_height=1.6, object_height=1.0, focal=3351.6,
               size=(4032, 3024)):
    intr = CameraIntrinsics.from_image(*size, focal_px=focal)
    pose = CameraPose(pitch_deg=pitch, yaw_deg=yaw, height=camera_height)
    return SceneSpec.at_distance(intr, pose, distance, object_height)
