"""Pinhole camera model and square marker geometry.

Projection follows the standard pinhole reading: divide by depth first,
then apply the intrinsic matrix, so ``u = fx * X/Z + cx``. There is no
lens distortion model; observations are ideal sub-pixel projections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2, Point3, RigidTransform, camera_frame, tag_frame


class BehindCameraError(ValueError):
    """Raised when a point at non-positive depth is projected."""

    def __init__(self, z: float, corner_index: int | None = None):
        self.z = z
        self.corner_index = corner_index
        where = "" if corner_index is None else f" (corner {corner_index})"
        super().__init__(f"point at depth z={z:.6g} mm is behind the camera{where}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics, all in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width) or not (0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the sensor")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def on_sensor(self, p: Point2) -> bool:
        return 0.0 <= p.u <= self.width and 0.0 <= p.v <= self.height


@dataclass(frozen=True)
class MarkerSpec:
    """A square fiducial marker in its own frame (z = 0 plane).

    Corners are ordered counter-clockwise starting top-left, where "top"
    is +y and "left" is -x in the marker frame:
    (-h, +h), (-h, -h), (+h, -h), (+h, +h), all at z = 0.
    """

    tag_id: int
    side_mm: float

    def __post_init__(self):
        if self.side_mm <= 0:
            raise ValueError("marker side length must be positive")

    @property
    def frame(self) -> str:
        return tag_frame(self.tag_id)

    def corners(self) -> np.ndarray:
        h = self.side_mm / 2.0
        return np.array(
            [[-h, h, 0.0], [-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0]]
        )


def project_point(k: CameraIntrinsics, p: Point3) -> Point2:
    """Project a camera-frame 3D point to sub-pixel image coordinates."""
    if p.z <= 0:
        raise BehindCameraError(p.z)
    u = k.fx * (p.x / p.z) + k.cx
    v = k.fy * (p.y / p.z) + k.cy
    return Point2(u, v)


def project_points(k: CameraIntrinsics, pts: np.ndarray) -> np.ndarray:
    """Vectorized projection of an (n, 3) camera-frame array to (n, 2) pixels."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    bad = np.nonzero(z <= 0)[0]
    if bad.size:
        raise BehindCameraError(float(z[bad[0]]), corner_index=int(bad[0]))
    uv = np.empty((pts.shape[0], 2))
    uv[:, 0] = k.fx * pts[:, 0] / z + k.cx
    uv[:, 1] = k.fy * pts[:, 1] / z + k.cy
    return uv


def project_marker(
    k: CameraIntrinsics, marker: MarkerSpec, pose: RigidTransform
) -> list[Point2]:
    """Project the four marker corners through a marker->camera pose.

    Output order follows the marker corner order regardless of how the
    marker is rotated in view.
    """
    cam_pts = (pose.rotation.as_matrix() @ marker.corners().T).T
    cam_pts = cam_pts + pose.translation.as_array()
    uv = project_points(k, cam_pts)
    return [Point2(float(u), float(v)) for u, v in uv]
