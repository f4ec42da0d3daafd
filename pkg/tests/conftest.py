"""Shared fixtures and synthetic-observation helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fidunav.camera import CameraIntrinsics, MarkerSpec, project_marker
from fidunav.geometry import Point2, RigidTransform, Rotation, camera_frame
from fidunav.pnp import TagObservation
from fidunav.rig import paper_default_rig


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per release criterion, outside output capture."""
    try:
        from test_acceptance import CRITERION_RESULTS
    except ImportError:
        return
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in CRITERION_RESULTS:
        terminalreporter.write_line(
            f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
        )


@pytest.fixture(scope="session")
def rig():
    return paper_default_rig()


@pytest.fixture(scope="session")
def intrinsics():
    return CameraIntrinsics(fx=1000.0, fy=1000.0, cx=960.0, cy=640.0,
                            width=1920, height=1280)


@pytest.fixture(scope="session")
def marker():
    return MarkerSpec(tag_id=7, side_mm=24.0)


def random_tag_pose(
    rng: np.random.Generator,
    marker: MarkerSpec,
    camera_id: int = 0,
    tilt_deg=(10.0, 60.0),
    depth_mm=(400.0, 1100.0),
) -> RigidTransform:
    """A random tag->camera pose with bounded tilt and depth.

    Tilt is the angle between the tag normal and the viewing direction;
    bounding it away from zero avoids the planar two-fold ambiguity.
    """
    tilt = math.radians(rng.uniform(*tilt_deg))
    tilt_axis_angle = rng.uniform(0.0, 2.0 * math.pi)
    axis = [math.cos(tilt_axis_angle), math.sin(tilt_axis_angle), 0.0]
    spin = Rotation.rot_z(rng.uniform(0.0, 360.0))
    rot = Rotation.from_axis_angle(axis, tilt) * spin
    depth = rng.uniform(*depth_mm)
    lateral = rng.uniform(-0.05, 0.05, size=2) * depth
    return RigidTransform.make(
        rot, (lateral[0], lateral[1], depth),
        marker.frame, camera_frame(camera_id),
    )


def observation_for(
    k: CameraIntrinsics,
    marker: MarkerSpec,
    pose: RigidTransform,
    camera_id: int = 0,
    noise_px: float = 0.0,
    rng: np.random.Generator | None = None,
    timestamp_us: int = 0,
) -> TagObservation:
    """Project a tag pose into a synthetic observation, optionally noisy."""
    corners = project_marker(k, marker, pose)
    if noise_px > 0.0:
        assert rng is not None
        corners = [
            Point2(c.u + rng.normal(0.0, noise_px), c.v + rng.normal(0.0, noise_px))
            for c in corners
        ]
    return TagObservation(
        camera_id=camera_id, tag_id=marker.tag_id,
        corners=tuple(corners), timestamp_us=timestamp_us,
    )
