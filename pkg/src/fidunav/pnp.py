"""Planar marker pose from 3D-2D corner correspondences.

A single square tag gives four coplanar points, so the pose is
initialized from the marker-plane-to-image homography (normalized DLT)
and then refined by damped iterative least squares on the reprojection
residual. The reported error is the mean per-corner Euclidean pixel
distance between detected and projected corners.

Planar targets admit a two-fold pose ambiguity near fronto-parallel
viewing; ``ambiguity_check`` refines the mirrored solution and keeps the
branch with the lower reprojection error, flagging near-ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .camera import BehindCameraError, CameraIntrinsics, MarkerSpec, project_points
from .geometry import Point2, Point3, RigidTransform, Rotation, camera_frame

MAX_ITERATIONS = 100
STEP_NORM_TOL = 1e-10
AMBIGUITY_RATIO = 0.10


class DegenerateGeometryError(ValueError):
    """Raised when the observed corners cannot constrain a pose."""


@dataclass(frozen=True)
class TagObservation:
    """Four detected sub-pixel corners of one tag in one camera."""

    camera_id: int
    tag_id: int
    corners: tuple[Point2, Point2, Point2, Point2]
    timestamp_us: int

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ValueError("a tag observation carries exactly 4 corners")

    def corner_array(self) -> np.ndarray:
        return np.array([[c.u, c.v] for c in self.corners], dtype=float)


@dataclass(frozen=True)
class PoseEstimate:
    """Solved tag->camera pose with fit diagnostics."""

    pose: RigidTransform
    reproj_error: float
    n_points: int
    converged: bool
    iterations: int
    ambiguous: bool = False


def _check_corner_geometry(pts: np.ndarray) -> None:
    # Reject duplicate and collinear corners; either makes the
    # homography rank-deficient.
    for i in range(4):
        for j in range(i + 1, 4):
            if np.linalg.norm(pts[i] - pts[j]) < 1e-6:
                raise DegenerateGeometryError(
                    f"corners {i} and {j} coincide at {pts[i]}"
                )
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                a, b, c = pts[i], pts[j], pts[k]
                area = abs(
                    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
                )
                if area < 1e-6:
                    raise DegenerateGeometryError(
                        f"corners {i}, {j}, {k} are collinear"
                    )


def _normalization(pts: np.ndarray) -> np.ndarray:
    """Hartley similarity normalization for 2D points (3x3 matrix)."""
    centroid = pts.mean(axis=0)
    d = np.linalg.norm(pts - centroid, axis=1).mean()
    s = math.sqrt(2.0) / d if d > 0 else 1.0
    return np.array(
        [[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1]]
    )


def _homography_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Plane-to-image homography from 4+ correspondences (normalized DLT)."""
    ts, td = _normalization(src), _normalization(dst)
    sh = (ts @ np.column_stack([src, np.ones(len(src))]).T).T
    dh = (td @ np.column_stack([dst, np.ones(len(dst))]).T).T
    rows = []
    for (x, y, _), (u, v, _) in zip(sh, dh):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    _, _, vt = np.linalg.svd(np.array(rows))
    h = vt[-1].reshape(3, 3)
    return np.linalg.inv(td) @ h @ ts


def _pose_from_homography(
    k: CameraIntrinsics, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a marker-plane homography into (R, t) with the tag in front."""
    m = np.linalg.inv(k.as_matrix()) @ h
    n1, n2 = np.linalg.norm(m[:, 0]), np.linalg.norm(m[:, 1])
    if n1 < 1e-12 or n2 < 1e-12:
        raise DegenerateGeometryError("degenerate homography decomposition")
    lam = 2.0 / (n1 + n2)
    m = m * lam
    if m[2, 2] < 0:
        m = -m
    r1, r2, t = m[:, 0], m[:, 1], m[:, 2]
    r0 = np.column_stack([r1, r2, np.cross(r1, r2)])
    u, _, vt = np.linalg.svd(r0)
    r = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
    return r, t


def _residual_and_jacobian(
    k: CameraIntrinsics, obj: np.ndarray, img: np.ndarray,
    r: np.ndarray, t: np.ndarray, with_jacobian: bool = True
):
    """Stacked residual (detected - projected) and its Jacobian.

    The Jacobian is taken with respect to a 6-vector [omega, dt] where
    omega is a left-multiplicative rotation perturbation
    R <- exp([omega]x) R.
    """
    cam = (r @ obj.T).T + t
    z = cam[:, 2]
    if np.any(z <= 0):
        bad = int(np.nonzero(z <= 0)[0][0])
        raise BehindCameraError(float(z[bad]), corner_index=bad)
    proj = np.empty((len(obj), 2))
    proj[:, 0] = k.fx * cam[:, 0] / z + k.cx
    proj[:, 1] = k.fy * cam[:, 1] / z + k.cy
    res = (img - proj).ravel()
    if not with_jacobian:
        return res, None
    jac = np.zeros((2 * len(obj), 6))
    for i, p in enumerate(cam):
        x, y, zz = p
        dproj = np.array(
            [[k.fx / zz, 0.0, -k.fx * x / zz**2],
             [0.0, k.fy / zz, -k.fy * y / zz**2]]
        )
        rp = r @ obj[i]
        skew = np.array(
            [[0, -rp[2], rp[1]], [rp[2], 0, -rp[0]], [-rp[1], rp[0], 0]]
        )
        dq = np.column_stack([-skew, np.eye(3)])
        jac[2 * i: 2 * i + 2] = -dproj @ dq
    return res, jac


def _refine(
    k: CameraIntrinsics, obj: np.ndarray, img: np.ndarray,
    r0: np.ndarray, t0: np.ndarray
) -> tuple[np.ndarray, np.ndarray, bool, int]:
    """Damped least-squares refinement (Levenberg-style lambda schedule)."""
    r, t = r0.copy(), t0.copy()
    res, jac = _residual_and_jacobian(k, obj, img, r, t)
    cost = float(res @ res)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, MAX_ITERATIONS + 1):
        a = jac.T @ jac
        g = -(jac.T @ res)
        try:
            step = np.linalg.solve(a + lam * np.eye(6), g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        r_new = Rotation.from_rotvec(step[:3]).as_matrix() @ r
        t_new = t + step[3:]
        try:
            res_new, jac_new = _residual_and_jacobian(k, obj, img, r_new, t_new)
        except BehindCameraError:
            lam *= 10.0
            continue
        cost_new = float(res_new @ res_new)
        step_norm = float(np.linalg.norm(step))
        if cost_new <= cost:
            r, t, res, jac, cost = r_new, t_new, res_new, jac_new, cost_new
            lam = max(lam / 10.0, 1e-14)
            if step_norm < STEP_NORM_TOL:
                converged = True
                break
        else:
            # A rejected sub-tolerance step means we are pinned at the
            # optimum to machine precision.
            if step_norm < STEP_NORM_TOL:
                converged = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
    return r, t, converged, it


def reprojection_error(
    k: CameraIntrinsics, marker: MarkerSpec, pose: RigidTransform,
    obs: TagObservation
) -> float:
    """Mean per-corner Euclidean pixel distance at the given pose."""
    cam = (pose.rotation.as_matrix() @ marker.corners().T).T
    cam = cam + pose.translation.as_array()
    proj = project_points(k, cam)
    return float(np.mean(np.linalg.norm(obs.corner_array() - proj, axis=1)))


def solve_pnp_planar(
    k: CameraIntrinsics, marker: MarkerSpec, obs: TagObservation
) -> PoseEstimate:
    """Solve the tag->camera pose minimizing squared reprojection residuals."""
    img = obs.corner_array()
    obj = marker.corners()
    _check_corner_geometry(img)
    h = _homography_dlt(obj[:, :2], img)
    r0, t0 = _pose_from_homography(k, h)
    r, t, converged, iterations = _refine(k, obj, img, r0, t0)
    pose = RigidTransform.make(
        Rotation.from_matrix(r), t, marker.frame, camera_frame(obs.camera_id)
    )
    err = reprojection_error(k, marker, pose, obs)
    return PoseEstimate(
        pose=pose, reproj_error=err, n_points=4,
        converged=converged, iterations=iterations,
    )


def _mirrored_init(r: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Initial rotation for the mirrored planar branch.

    The marker-plane normal is reflected about the viewing ray to the
    marker center; the rotation that carries the normal onto its
    reflection is applied on the left. Fronto-parallel poses are their
    own mirror image, which is exactly the maximally ambiguous case.
    """
    n = r[:, 2]
    d = np.linalg.norm(t)
    if d < 1e-12:
        return r
    v = t / d
    n_ref = 2.0 * float(n @ v) * v - n
    axis = np.cross(n, n_ref)
    s = np.linalg.norm(axis)
    c = float(np.clip(n @ n_ref, -1.0, 1.0))
    if s < 1e-12:
        return r
    return Rotation.from_axis_angle(axis, math.atan2(s, c)).as_matrix() @ r


def ambiguity_check(
    estimate: PoseEstimate, k: CameraIntrinsics, marker: MarkerSpec,
    obs: TagObservation
) -> PoseEstimate:
    """Evaluate the mirrored planar branch; keep the lower-error pose.

    The estimate is flagged ambiguous when both branches fit the corners
    within 10% of each other, as happens near fronto-parallel viewing.
    """
    img = obs.corner_array()
    obj = marker.corners()
    r = estimate.pose.rotation.as_matrix()
    t = estimate.pose.translation.as_array()
    r_m, t_m, conv_m, it_m = _refine(k, obj, img, _mirrored_init(r, t), t.copy())
    pose_m = RigidTransform.make(
        Rotation.from_matrix(r_m), t_m, marker.frame,
        camera_frame(obs.camera_id),
    )
    try:
        err_m = reprojection_error(k, marker, pose_m, obs)
    except BehindCameraError:
        return estimate
    e0 = estimate.reproj_error
    worse = max(e0, err_m)
    flagged = worse > 0 and abs(e0 - err_m) / worse < AMBIGUITY_RATIO
    # Same-branch re-convergence counts as an exact tie, not ambiguity.
    same = (
        np.allclose(r_m, r, atol=1e-6)
        and np.allclose(t_m, t, atol=1e-6)
    )
    if same:
        return estimate
    if err_m < e0:
        return PoseEstimate(
            pose=pose_m, reproj_error=err_m, n_points=4, converged=conv_m,
            iterations=estimate.iterations + it_m, ambiguous=flagged,
        )
    return replace(estimate, ambiguous=flagged)
