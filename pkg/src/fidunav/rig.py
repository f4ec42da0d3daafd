"""Rig configuration and per-frame pose assembly.

A rig is a set of calibrated cameras with known world->camera
extrinsics, four head-mounted markers with known mounts, and one coil
marker. Configuration documents are YAML; the preset keyword
``paper-default`` materializes a three-camera rig (one frontal, two
lateral) with 1920x1280 sensors and fx = fy = 1506.9 px, the focal
length implied by a 65 degree horizontal field of view.

Transform direction conventions in config files:
    - camera ``extrinsic``: 4x4 row-major matrix mapping world
      coordinates to camera coordinates.
    - marker ``mount``: 4x4 row-major matrix giving the tag frame
      expressed in the body (head or coil) frame, i.e. mapping
      tag coordinates to body coordinates.

Recovered body poses are returned as body->world transforms (the body
frame expressed in world coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .camera import CameraIntrinsics, MarkerSpec
from .fusion import (
    TranslationSigma,
    fuse_positions,
    fuse_rotations,
    propagate_sigma,
)
from .geometry import (
    COIL,
    HEAD,
    Point3,
    RigidTransform,
    Rotation,
    WORLD,
    camera_frame,
    compose,
    invert,
    tag_frame,
)
from .pnp import PoseEstimate, TagObservation

# Focal length implied by a 65 degree horizontal FOV on a 1920 px sensor.
PAPER_DEFAULT_FX = (1920.0 / 2.0) / math.tan(math.radians(65.0 / 2.0))

# Frame-assembly timestamp agreement tolerance across cameras.
SYNC_TOLERANCE_US = 10_000

AMBIGUOUS_SIGMA_INFLATION = 10.0


class RigConfigError(ValueError):
    """Raised for malformed rig configuration documents."""


class NoMarkerVisibleError(RuntimeError):
    """Raised when no marker of the requested body is visible."""


@dataclass(frozen=True)
class RigCamera:
    camera_id: int
    intrinsics: CameraIntrinsics
    extrinsic: RigidTransform  # world -> camera


@dataclass(frozen=True)
class MarkerMount:
    marker: MarkerSpec
    mount: RigidTransform  # tag -> body


@dataclass(frozen=True)
class RigConfig:
    cameras: tuple[RigCamera, ...]
    head_markers: tuple[MarkerMount, ...]
    coil_marker: MarkerMount
    coil_offset_mm: float = 10.0

    def __post_init__(self):
        if not self.cameras:
            raise RigConfigError("rig needs at least one camera")
        ids = [m.marker.tag_id for m in self.head_markers]
        ids.append(self.coil_marker.marker.tag_id)
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise RigConfigError(f"duplicate tag ids in rig: {sorted(dupes)}")
        cam_ids = [c.camera_id for c in self.cameras]
        if len(set(cam_ids)) != len(cam_ids):
            raise RigConfigError("duplicate camera ids in rig")

    def camera(self, camera_id: int) -> RigCamera:
        for c in self.cameras:
            if c.camera_id == camera_id:
                return c
        raise KeyError(f"camera {camera_id} not in rig")

    def marker_by_tag(self, tag_id: int) -> tuple[MarkerMount, str]:
        """Return (mount, body frame) for a tag id."""
        for m in self.head_markers:
            if m.marker.tag_id == tag_id:
                return m, HEAD
        if self.coil_marker.marker.tag_id == tag_id:
            return self.coil_marker, COIL
        raise KeyError(f"tag {tag_id} not in rig")

    def tag_ids(self) -> list[int]:
        return [m.marker.tag_id for m in self.head_markers] + [
            self.coil_marker.marker.tag_id
        ]


@dataclass(frozen=True)
class TrackedFramePoses:
    """Fused per-frame output of the tracking chain."""

    timestamp_us: int
    head_pose: RigidTransform | None  # head -> world
    head_sigma: TranslationSigma | None
    coil_pose: RigidTransform | None  # coil -> world
    coil_sigma: TranslationSigma | None
    target_point_head: Point3 | None
    diagnostics: tuple[tuple[int, int, float, float], ...] = ()
    # diagnostics entries: (camera_id, tag_id, e_proj, sigma_distance)


def _look_at_extrinsic(
    camera_id: int, position, look_at, up=(0.0, 1.0, 0.0)
) -> RigidTransform:
    """world->camera transform for a camera at ``position`` looking at a point.

    Camera convention: +z forward (into the scene), +x right, +y down.
    """
    position = np.asarray(position, dtype=float)
    fwd = np.asarray(look_at, dtype=float) - position
    fwd = fwd / np.linalg.norm(fwd)
    up = np.asarray(up, dtype=float)
    right = np.cross(fwd, up)
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    r_wc = np.column_stack([right, down, fwd])  # camera axes in world coords
    r_cw = r_wc.T
    t = -r_cw @ position
    return RigidTransform.make(
        Rotation.from_matrix(r_cw), t, WORLD, camera_frame(camera_id)
    )


def _mount_from_point_normal(p, normal, up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """4x4 tag->body matrix for a tag at point ``p`` with outward normal."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    up = np.asarray(up, dtype=float)
    x = np.cross(up, n)
    if np.linalg.norm(x) < 1e-9:
        x = np.cross([1.0, 0.0, 0.0], n)
    x = x / np.linalg.norm(x)
    y = np.cross(n, x)
    m = np.eye(4)
    m[:3, 0], m[:3, 1], m[:3, 2], m[:3, 3] = x, y, n, np.asarray(p, float)
    return m


def paper_default_rig(
    coil_offset_mm: float = 10.0, camera_radius_mm: float = 600.0
) -> RigConfig:
    """Three-camera rig with one frontal and two lateral views.

    World frame: origin at the workspace (head) center, +y up, +z toward
    the frontal camera. Cameras sit on a 600 mm sphere at azimuths 0 and
    +/-55 degrees, elevated 20 degrees, all aimed at the origin (a
    working distance inside the 530-990 mm band the studies sweep; the
    elevation keeps superior coil placements well inside at least two
    views). Four 24 mm head markers (forehead, back, two cheeks) and one
    24 mm coil marker.
    """
    intr = CameraIntrinsics(
        fx=PAPER_DEFAULT_FX, fy=PAPER_DEFAULT_FX, cx=960.0, cy=640.0,
        width=1920, height=1280,
    )
    radius = camera_radius_mm
    elevation = math.radians(20.0)
    cams = []
    for cid, az_deg in ((0, 0.0), (1, 55.0), (2, -55.0)):
        az = math.radians(az_deg)
        pos = (
            radius * math.sin(az) * math.cos(elevation),
            radius * math.sin(elevation),
            radius * math.cos(az) * math.cos(elevation),
        )
        cams.append(RigCamera(cid, intr, _look_at_extrinsic(cid, pos, (0, 0, 0))))

    head_layout = [
        (1, (0.0, 30.0, 85.0), (0.0, 0.2, 1.0)),      # forehead
        (2, (0.0, 30.0, -85.0), (0.0, 0.2, -1.0)),    # back of head
        (3, (80.0, -20.0, 35.0), (0.9, 0.0, 0.45)),   # cheek
        (4, (-80.0, -20.0, 35.0), (-0.9, 0.0, 0.45)),  # cheek
    ]
    head_markers = tuple(
        MarkerMount(
            MarkerSpec(tag_id=tid, side_mm=24.0),
            RigidTransform.from_matrix(
                _mount_from_point_normal(p, n), tag_frame(tid), HEAD
            ),
        )
        for tid, p, n in head_layout
    )
    # Coil tag sits at the coil origin with aligned axes.
    coil = MarkerMount(
        MarkerSpec(tag_id=5, side_mm=24.0),
        RigidTransform.from_matrix(np.eye(4), tag_frame(5), COIL),
    )
    return RigConfig(
        cameras=tuple(cams), head_markers=head_markers, coil_marker=coil,
        coil_offset_mm=coil_offset_mm,
    )


def _matrix_from_config(value, path: str) -> np.ndarray:
    m = np.asarray(value, dtype=float)
    if m.shape != (4, 4):
        raise RigConfigError(f"{path}: expected a 4x4 matrix, got shape {m.shape}")
    if not np.allclose(m[3], [0, 0, 0, 1], atol=1e-9):
        raise RigConfigError(f"{path}: last row must be [0, 0, 0, 1]")
    r = m[:3, :3]
    if abs(np.linalg.det(r) - 1.0) > 1e-6 or not np.allclose(
        r.T @ r, np.eye(3), atol=1e-6
    ):
        raise RigConfigError(f"{path}: rotation block is not orthonormal")
    return m


def load_rig_config(text: str) -> RigConfig:
    """Parse a YAML rig document (or the ``preset: paper-default`` keyword)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise RigConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise RigConfigError("rig document must be a mapping")
    preset = doc.get("preset")
    if preset is not None:
        if preset != "paper-default":
            raise RigConfigError(f"unknown preset {preset!r}")
        return paper_default_rig(
            coil_offset_mm=float(doc.get("coil_offset_mm", 10.0))
        )
    for key in ("cameras", "head_markers", "coil_marker"):
        if key not in doc:
            raise RigConfigError(f"missing required section {key!r}")
    cameras = []
    for i, c in enumerate(doc["cameras"]):
        path = f"cameras[{i}]"
        try:
            intr = CameraIntrinsics(
                fx=float(c["fx"]), fy=float(c["fy"]), cx=float(c["cx"]),
                cy=float(c["cy"]), width=int(c["width"]), height=int(c["height"]),
            )
        except KeyError as exc:
            raise RigConfigError(f"{path}: missing field {exc}") from exc
        except ValueError as exc:
            raise RigConfigError(f"{path}: {exc}") from exc
        cid = int(c["id"])
        ext = RigidTransform.from_matrix(
            _matrix_from_config(c["extrinsic"], f"{path}.extrinsic"),
            WORLD, camera_frame(cid),
        )
        cameras.append(RigCamera(cid, intr, ext))

    def parse_marker(node, path: str, body: str) -> MarkerMount:
        try:
            tid = int(node["tag_id"])
            spec = MarkerSpec(tag_id=tid, side_mm=float(node["side_mm"]))
        except KeyError as exc:
            raise RigConfigError(f"{path}: missing field {exc}") from exc
        mount = RigidTransform.from_matrix(
            _matrix_from_config(node["mount"], f"{path}.mount"),
            tag_frame(tid), body,
        )
        return MarkerMount(spec, mount)

    head = tuple(
        parse_marker(n, f"head_markers[{i}]", HEAD)
        for i, n in enumerate(doc["head_markers"])
    )
    coil = parse_marker(doc["coil_marker"], "coil_marker", COIL)
    try:
        return RigConfig(
            cameras=tuple(cameras), head_markers=head, coil_marker=coil,
            coil_offset_mm=float(doc.get("coil_offset_mm", 10.0)),
        )
    except RigConfigError:
        raise
    except ValueError as exc:
        raise RigConfigError(str(exc)) from exc


def _candidates(
    per_tag: list[tuple[int, int, PoseEstimate]], rig: RigConfig, body: str
) -> list[tuple[Point3, TranslationSigma, Rotation, float]]:
    """Map tag->camera estimates to body->world pose candidates.

    Returns (position, sigma, rotation, e_proj, ambiguous) per estimate.
    The chain is: tag->world = invert(extrinsic) o tag->camera, then
    body->world = tag->world o invert(mount is tag->body) ... i.e.
    body->world = (tag->world) composed with (body->tag).
    """
    out = []
    for tag_id, cam_id, est in per_tag:
        mount, mount_body = rig.marker_by_tag(tag_id)
        if mount_body != body:
            continue
        cam = rig.camera(cam_id)
        tag_to_world = compose(invert(cam.extrinsic), est.pose)
        body_to_world = compose(tag_to_world, invert(mount.mount))
        t_z = est.pose.translation.z
        if t_z <= 0:
            continue
        sigma = propagate_sigma(est.reproj_error, t_z, cam.intrinsics)
        if est.ambiguous:
            sigma = sigma.scaled(AMBIGUOUS_SIGMA_INFLATION)
        out.append(
            (
                body_to_world.translation,
                sigma,
                body_to_world.rotation,
                est.reproj_error,
                est.ambiguous,
            )
        )
    return out


def _fuse_candidates(
    cands, body: str
) -> tuple[RigidTransform, TranslationSigma]:
    unflagged = [c for c in cands if not c[4]]
    # Ambiguous estimates are dropped when at least two clean ones
    # remain; otherwise kept with their inflated sigma.
    use = unflagged if len(unflagged) >= 2 else cands
    pos, sigma = fuse_positions([(c[0], c[1]) for c in use])
    weights = [
        (c[2], 1.0 / max(float(np.sum(c[1].as_array() ** 2)), 1e-18))
        for c in use
    ]
    rot = fuse_rotations(weights)
    return RigidTransform.make(rot, pos, body, WORLD), sigma


def head_pose_from_markers(
    per_tag: list[tuple[int, int, PoseEstimate]], rig: RigConfig
) -> tuple[RigidTransform, TranslationSigma]:
    """Fused head->world pose from all visible head-marker estimates.

    ``per_tag`` entries are (tag_id, camera_id, PoseEstimate).
    """
    cands = _candidates(per_tag, rig, HEAD)
    if not cands:
        raise NoMarkerVisibleError("no head marker visible in any camera")
    return _fuse_candidates(cands, HEAD)


def coil_pose(
    per_tag: list[tuple[int, int, PoseEstimate]], rig: RigConfig
) -> tuple[RigidTransform, TranslationSigma]:
    """Fused coil->world pose from coil-marker estimates."""
    cands = _candidates(per_tag, rig, COIL)
    if not cands:
        raise NoMarkerVisibleError("coil marker not visible in any camera")
    return _fuse_candidates(cands, COIL)


def target_point(
    head: RigidTransform, coil: RigidTransform, rig: RigConfig
) -> Point3:
    """Stimulation target in head-frame coordinates.

    The target sits ``coil_offset_mm`` along the coil's -z axis from the
    coil origin; both input poses are body->world.
    """
    offset_world = coil.apply([0.0, 0.0, -rig.coil_offset_mm])
    target_head = invert(head).apply(offset_world)
    return Point3.from_array(target_head)


def assemble_frame(
    observations: list[TagObservation],
    rig: RigConfig,
    timestamp_us: int,
    solver=None,
) -> TrackedFramePoses:
    """Run per-camera solves and fusion for one synchronized frame.

    Observations whose timestamps disagree with the frame timestamp by
    more than the sync tolerance are dropped as stale.
    """
    from . import pnp
    from .fusion import distance_sigma

    solve = solver or (
        lambda cam, mount, obs: pnp.ambiguity_check(
            pnp.solve_pnp_planar(cam.intrinsics, mount.marker, obs),
            cam.intrinsics, mount.marker, obs,
        )
    )
    per_tag: list[tuple[int, int, PoseEstimate]] = []
    diagnostics = []
    for obs in observations:
        if abs(obs.timestamp_us - timestamp_us) > SYNC_TOLERANCE_US:
            continue
        try:
            cam = rig.camera(obs.camera_id)
            mount, _ = rig.marker_by_tag(obs.tag_id)
        except KeyError:
            continue
        try:
            est = solve(cam, mount, obs)
        except (pnp.DegenerateGeometryError, ValueError):
            continue
        per_tag.append((obs.tag_id, obs.camera_id, est))
        t = est.pose.translation
        try:
            sd = distance_sigma(
                t, propagate_sigma(est.reproj_error, t.z, cam.intrinsics)
            ).sigma
        except (ValueError, ZeroDivisionError):
            sd = float("nan")
        diagnostics.append((obs.camera_id, obs.tag_id, est.reproj_error, sd))

    head = head_sigma = coil = coil_sigma = None
    try:
        head, head_sigma = head_pose_from_markers(per_tag, rig)
    except NoMarkerVisibleError:
        pass
    try:
        coil, coil_sigma = coil_pose(per_tag, rig)
    except NoMarkerVisibleError:
        pass
    target = (
        target_point(head, coil, rig) if head is not None and coil is not None
        else None
    )
    return TrackedFramePoses(
        timestamp_us=timestamp_us,
        head_pose=head, head_sigma=head_sigma,
        coil_pose=coil, coil_sigma=coil_sigma,
        target_point_head=target,
        diagnostics=tuple(diagnostics),
    )
