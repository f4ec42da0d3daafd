"""Synthetic rig simulator: the ground-truth oracle for the pipeline.

Generates per-camera tag observations from configurable scenes. Corners
are exact pinhole projections plus i.i.d. Gaussian pixel noise; tags
facing away from a camera or projecting (after noise) off-sensor are
omitted, as are explicitly occluded (camera, tag) pairs.

Randomness comes from numpy's default PCG64 generator seeded from the
scenario seed, so identical seeds give bit-identical streams.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np
import yaml

from .camera import CameraIntrinsics, MarkerSpec, project_points
from .geometry import (
    COIL,
    HEAD,
    Point2,
    Point3,
    RigidTransform,
    Rotation,
    WORLD,
    compose,
    invert,
)
from .pnp import TagObservation
from .rig import MarkerMount, RigConfig, load_rig_config, paper_default_rig, target_point

PRECISION_DEPTHS_MM = (530.0, 645.0, 760.0, 875.0, 990.0)
PRECISION_FRAMES = 100
LOCALIZATION_FRAMES_PER_POINT = 100
DEFAULT_NOISE_PX = 0.3
HEAD_SPHERE_RADIUS_MM = 90.0


@dataclass(frozen=True)
class Occlusion:
    camera_id: int
    tag_id: int
    t_start_us: int
    t_end_us: int

    def active(self, t_us: int) -> bool:
        return self.t_start_us <= t_us <= self.t_end_us


@dataclass(frozen=True)
class GroundTruth:
    head_pose: RigidTransform  # head -> world
    coil_pose: RigidTransform  # coil -> world
    target_head: Point3


@dataclass(frozen=True)
class SimFrame:
    timestamp_us: int
    observations: tuple[TagObservation, ...]
    truth: GroundTruth


@dataclass
class Scenario:
    rig: RigConfig
    head_trajectory: list[tuple[int, RigidTransform]]  # (t_us, head->world)
    coil_trajectory: list[tuple[int, RigidTransform]]  # (t_us, coil->world)
    noise_px: float = DEFAULT_NOISE_PX
    occlusions: list[Occlusion] = field(default_factory=list)
    frame_rate_hz: float = 30.0
    n_frames: int = 100
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if self.noise_px < 0:
            raise ValueError("noise_px must be non-negative")
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be positive")
        for traj in (self.head_trajectory, self.coil_trajectory):
            times = [t for t, _ in traj]
            if times != sorted(times):
                raise ValueError("trajectories must be time-sorted")
            if not traj:
                raise ValueError("trajectories must be non-empty")


def pose_at(trajectory: list[tuple[int, RigidTransform]], t_us: int) -> RigidTransform:
    """Piecewise-hold trajectory lookup: last entry at or before t."""
    current = trajectory[0][1]
    for entry_t, pose in trajectory:
        if entry_t <= t_us:
            current = pose
        else:
            break
    return current


def _tag_visible(
    intr: CameraIntrinsics,
    tag_cam: RigidTransform,
) -> bool:
    """Back-face test: the tag's outward normal must face the camera."""
    normal = tag_cam.rotation.as_matrix()[:, 2]
    center = tag_cam.translation.as_array()
    d = np.linalg.norm(center)
    if d < 1e-9 or center[2] <= 0:
        return False
    return float(normal @ (center / d)) < 0.0


def _observe(
    rig: RigConfig,
    mount: MarkerMount,
    body_pose: RigidTransform,
    t_us: int,
    noise_px: float,
    rng: np.random.Generator,
) -> list[TagObservation]:
    obs = []
    tag_world = compose(body_pose, mount.mount)  # tag -> world
    for cam in rig.cameras:
        tag_cam = compose(cam.extrinsic, tag_world)
        if not _tag_visible(cam.intrinsics, tag_cam):
            continue
        corners_cam = (
            tag_cam.rotation.as_matrix() @ mount.marker.corners().T
        ).T + tag_cam.translation.as_array()
        if np.any(corners_cam[:, 2] <= 0):
            continue
        uv = project_points(cam.intrinsics, corners_cam)
        if noise_px > 0:
            uv = uv + rng.normal(0.0, noise_px, uv.shape)
        if np.any(uv[:, 0] < 0) or np.any(uv[:, 0] > cam.intrinsics.width):
            continue
        if np.any(uv[:, 1] < 0) or np.any(uv[:, 1] > cam.intrinsics.height):
            continue
        obs.append(
            TagObservation(
                camera_id=cam.camera_id,
                tag_id=mount.marker.tag_id,
                corners=tuple(Point2(float(u), float(v)) for u, v in uv),
                timestamp_us=t_us,
            )
        )
    return obs


def synthesize_frame(
    rig: RigConfig,
    head_pose: RigidTransform,
    coil_pose: RigidTransform,
    t_us: int,
    noise_px: float,
    rng: np.random.Generator,
    occlusions: list[Occlusion] = (),
) -> SimFrame:
    """Generate all visible observations for one instant.

    Draw order is fixed (head markers in rig order, then the coil
    marker, cameras in rig order inside each) so streams are
    reproducible.
    """
    observations: list[TagObservation] = []
    for mount, body_pose in [
        *((m, head_pose) for m in rig.head_markers),
        (rig.coil_marker, coil_pose),
    ]:
        for o in _observe(rig, mount, body_pose, t_us, noise_px, rng):
            occluded = any(
                oc.camera_id == o.camera_id and oc.tag_id == o.tag_id
                and oc.active(t_us)
                for oc in occlusions
            )
            if not occluded:
                observations.append(o)
    truth = GroundTruth(
        head_pose=head_pose,
        coil_pose=coil_pose,
        target_head=target_point(head_pose, coil_pose, rig),
    )
    return SimFrame(timestamp_us=t_us, observations=tuple(observations), truth=truth)


def simulate(scenario: Scenario) -> Iterator[SimFrame]:
    """Deterministic frame stream for a scenario."""
    rng = np.random.default_rng(scenario.seed)
    for i in range(scenario.n_frames):
        t_us = round(i * 1_000_000.0 / scenario.frame_rate_hz)
        yield synthesize_frame(
            scenario.rig,
            pose_at(scenario.head_trajectory, t_us),
            pose_at(scenario.coil_trajectory, t_us),
            t_us,
            scenario.noise_px,
            rng,
            scenario.occlusions,
        )


def _static(pose: RigidTransform) -> list[tuple[int, RigidTransform]]:
    return [(0, pose)]


def _coil_pose_at_depth(depth_mm: float, rig: RigConfig) -> RigidTransform:
    """Static coil on the frontal camera axis at the given camera distance.

    The coil tag is tipped 35 degrees about x so no camera views it
    near fronto-parallel (which would be maximally pose-ambiguous).
    """
    frontal = rig.cameras[0]
    cam_pos = invert(frontal.extrinsic).translation.as_array()
    axis = -cam_pos / np.linalg.norm(cam_pos)  # from camera toward origin
    pos = cam_pos + depth_mm * axis
    return RigidTransform.make(Rotation.rot_x(35.0), pos, COIL, WORLD)


def preset_precision_study(
    noise_px: float = DEFAULT_NOISE_PX, seed: int = 0
) -> list[Scenario]:
    """Five static scenarios at camera distances 530..990 mm, 100 frames each."""
    rig = paper_default_rig()
    head = RigidTransform.make(Rotation.identity(), (0, 0, 0), HEAD, WORLD)
    out = []
    for i, depth in enumerate(PRECISION_DEPTHS_MM):
        out.append(
            Scenario(
                rig=rig,
                head_trajectory=_static(head),
                coil_trajectory=_static(_coil_pose_at_depth(depth, rig)),
                noise_px=noise_px,
                frame_rate_hz=30.0,
                n_frames=PRECISION_FRAMES,
                seed=seed + i,
                name=f"precision-{int(depth)}mm",
            )
        )
    return out


def localization_placements(
    radius_mm: float = HEAD_SPHERE_RADIUS_MM, coil_offset_mm: float = 10.0
) -> list[RigidTransform]:
    """15 coil placements: 3 latitudes x 5 longitudes on a head hemisphere.

    The coil origin sits ``coil_offset_mm`` outside the sphere with its
    -z axis pointing at the sphere center, so the stimulation target
    lands on the scalp sphere.
    """
    placements = []
    for el_deg in (20.0, 45.0, 70.0):
        for az_deg in (-60.0, -30.0, 0.0, 30.0, 60.0):
            el, az = math.radians(el_deg), math.radians(az_deg)
            outward = np.array(
                [math.sin(az) * math.cos(el), math.sin(el),
                 math.cos(az) * math.cos(el)]
            )
            pos = (radius_mm + coil_offset_mm) * outward
            z = outward
            up = np.array([0.0, 1.0, 0.0])
            x = np.cross(up, z)
            if np.linalg.norm(x) < 1e-9:
                x = np.array([1.0, 0.0, 0.0])
            x = x / np.linalg.norm(x)
            y = np.cross(z, x)
            r = Rotation.from_matrix(np.column_stack([x, y, z]))
            placements.append(RigidTransform.make(r, pos, COIL, WORLD))
    return placements


def preset_localization_study(
    noise_px: float = DEFAULT_NOISE_PX, seed: int = 0
) -> Scenario:
    """One scenario stepping through 15 placements, 100 frames each."""
    rig = paper_default_rig()
    head = RigidTransform.make(Rotation.identity(), (0, 0, 0), HEAD, WORLD)
    frame_rate = 30.0
    coil_traj = []
    for i, pose in enumerate(
        localization_placements(coil_offset_mm=rig.coil_offset_mm)
    ):
        t_us = round(i * LOCALIZATION_FRAMES_PER_POINT * 1_000_000.0 / frame_rate)
        coil_traj.append((t_us, pose))
    return Scenario(
        rig=rig,
        head_trajectory=_static(head),
        coil_trajectory=coil_traj,
        noise_px=noise_px,
        frame_rate_hz=frame_rate,
        n_frames=15 * LOCALIZATION_FRAMES_PER_POINT,
        seed=seed,
        name="localization-15pt",
    )


# --- scenario documents and frame-record streams -------------------------


def _pose_to_doc(p: RigidTransform) -> dict:
    return {"q": [p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z],
            "t": [p.translation.x, p.translation.y, p.translation.z]}


def _pose_from_doc(d: dict, from_frame: str, to_frame: str) -> RigidTransform:
    return RigidTransform.make(
        Rotation.from_quat(d["q"]), d["t"], from_frame, to_frame
    )


def load_scenario(text: str) -> Scenario:
    """Parse a YAML scenario document.

    Presets: a document that is just ``preset: precision-<depth>`` or
    ``preset: localization`` expands to the corresponding study
    scenario.
    """
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a mapping")
    preset = doc.get("preset")
    if preset is not None:
        noise = float(doc.get("noise_px", DEFAULT_NOISE_PX))
        seed = int(doc.get("seed", 0))
        scenario = None
        if preset == "localization":
            scenario = preset_localization_study(noise_px=noise, seed=seed)
        elif str(preset).startswith("precision-"):
            depth = float(str(preset).split("-", 1)[1])
            for s, d in zip(preset_precision_study(noise_px=noise, seed=seed),
                            PRECISION_DEPTHS_MM):
                if d == depth:
                    scenario = s
                    break
            if scenario is None:
                raise ValueError(f"no precision preset at depth {depth}")
        else:
            raise ValueError(f"unknown scenario preset {preset!r}")
        if "n_frames" in doc:
            scenario = replace(scenario, n_frames=int(doc["n_frames"]))
        return scenario
    rig_node = doc["rig"]
    rig = load_rig_config(yaml.safe_dump(rig_node))
    head_traj = [
        (int(e["t_us"]), _pose_from_doc(e, HEAD, WORLD))
        for e in doc["head_trajectory"]
    ]
    coil_traj = [
        (int(e["t_us"]), _pose_from_doc(e, COIL, WORLD))
        for e in doc["coil_trajectory"]
    ]
    occ = [
        Occlusion(int(o["camera_id"]), int(o["tag_id"]),
                  int(o["t_start_us"]), int(o["t_end_us"]))
        for o in doc.get("occlusions", [])
    ]
    return Scenario(
        rig=rig,
        head_trajectory=head_traj,
        coil_trajectory=coil_traj,
        noise_px=float(doc.get("noise_px", DEFAULT_NOISE_PX)),
        occlusions=occ,
        frame_rate_hz=float(doc.get("frame_rate_hz", 30.0)),
        n_frames=int(doc.get("n_frames", 100)),
        seed=int(doc.get("seed", 0)),
        name=str(doc.get("name", "scenario")),
    )


def frame_to_record(frame: SimFrame) -> str:
    """One newline-free JSON record for a simulated frame."""
    doc = {
        "t_us": frame.timestamp_us,
        "obs": [
            {
                "cam": o.camera_id,
                "tag": o.tag_id,
                "corners": [[c.u, c.v] for c in o.corners],
            }
            for o in frame.observations
        ],
        "truth": {
            "head": _pose_to_doc(frame.truth.head_pose),
            "coil": _pose_to_doc(frame.truth.coil_pose),
            "target": [
                frame.truth.target_head.x,
                frame.truth.target_head.y,
                frame.truth.target_head.z,
            ],
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def frame_from_record(line: str) -> SimFrame:
    doc = json.loads(line)
    t_us = int(doc["t_us"])
    obs = tuple(
        TagObservation(
            camera_id=int(o["cam"]),
            tag_id=int(o["tag"]),
            corners=tuple(Point2(float(u), float(v)) for u, v in o["corners"]),
            timestamp_us=t_us,
        )
        for o in doc["obs"]
    )
    truth = GroundTruth(
        head_pose=_pose_from_doc(doc["truth"]["head"], HEAD, WORLD),
        coil_pose=_pose_from_doc(doc["truth"]["coil"], COIL, WORLD),
        target_head=Point3.from_array(doc["truth"]["target"]),
    )
    return SimFrame(timestamp_us=t_us, observations=obs, truth=truth)
