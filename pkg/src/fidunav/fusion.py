"""Uncertainty propagation and inverse-variance fusion.

Translation sigmas are derived from the reprojection error and depth:

    sigma_tx = e_proj * t_z / fx
    sigma_ty = e_proj * t_z / fy
    sigma_tz = e_proj * t_z / sqrt(fx^2 + fy^2)

Note: sigma_ty uses fy. Printed sources sometimes carry fx in the ty
term; with the symmetric default intrinsics (fx == fy) the two readings
coincide, and fy is the dimensionally consistent choice for asymmetric
focal lengths.

Scalar distances and per-axis positions are fused by inverse-variance
weighting; rotations by the weighted chordal (quaternion eigenvector)
mean. Zero sigmas from noiseless data are floored at SIGMA_FLOOR_MM so a
perfect camera dominates without division by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .camera import CameraIntrinsics
from .geometry import Point3, Rotation

SIGMA_FLOOR_MM = 1e-9


class InvalidDepthError(ValueError):
    pass


class ZeroNormError(ValueError):
    pass


class EmptyFusionError(ValueError):
    pass


@dataclass(frozen=True)
class TranslationSigma:
    """Per-axis translation standard deviations in mm."""

    sigma_tx: float
    sigma_ty: float
    sigma_tz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma_tx, self.sigma_ty, self.sigma_tz])

    def scaled(self, factor: float) -> "TranslationSigma":
        return TranslationSigma(
            self.sigma_tx * factor, self.sigma_ty * factor, self.sigma_tz * factor
        )


@dataclass(frozen=True)
class DistanceEstimate:
    """One camera's distance estimate with its standard deviation."""

    camera_id: int
    distance: float
    sigma: float
    translation: Point3


@dataclass(frozen=True)
class FusedDistance:
    distance: float
    sigma: float
    contributor_count: int


def propagate_sigma(
    e_proj: float, t_z: float, k: CameraIntrinsics
) -> TranslationSigma:
    """Linearized translation sigmas from reprojection error and depth."""
    if t_z <= 0:
        raise InvalidDepthError(f"depth t_z={t_z:.6g} mm must be positive")
    if e_proj < 0:
        raise ValueError("reprojection error cannot be negative")
    return TranslationSigma(
        sigma_tx=e_proj * t_z / k.fx,
        sigma_ty=e_proj * t_z / k.fy,
        sigma_tz=e_proj * t_z / math.sqrt(k.fx**2 + k.fy**2),
    )


def distance_sigma(t: Point3, s: TranslationSigma) -> DistanceEstimate:
    """Distance d = |t| and its first-order standard deviation."""
    d = t.norm()
    if d == 0.0:
        raise ZeroNormError("cannot form a distance estimate from a zero translation")
    var = (
        (t.x / d * s.sigma_tx) ** 2
        + (t.y / d * s.sigma_ty) ** 2
        + (t.z / d * s.sigma_tz) ** 2
    )
    return DistanceEstimate(camera_id=-1, distance=d, sigma=math.sqrt(var),
                            translation=t)


def _floored(sigma: float) -> float:
    return max(sigma, SIGMA_FLOOR_MM)


def fuse_distances(estimates: Sequence[DistanceEstimate]) -> FusedDistance:
    """Inverse-variance weighted scalar distance fusion.

    Inputs are summed in camera-id order so the result is bit-for-bit
    independent of input order.
    """
    if not estimates:
        raise EmptyFusionError("no distance estimates to fuse")
    ordered = sorted(estimates, key=lambda e: e.camera_id)
    wsum = 0.0
    dsum = 0.0
    for e in ordered:
        w = 1.0 / _floored(e.sigma) ** 2
        wsum += w
        dsum += w * e.distance
    return FusedDistance(
        distance=dsum / wsum,
        sigma=math.sqrt(1.0 / wsum),
        contributor_count=len(ordered),
    )


def fuse_positions(
    estimates: Sequence[tuple[Point3, TranslationSigma]],
) -> tuple[Point3, TranslationSigma]:
    """Per-axis inverse-variance fusion of world-frame points.

    The scalar fusion rule is applied independently on each axis; inputs
    are summed in a deterministic order (sorted by coordinates).
    """
    if not estimates:
        raise EmptyFusionError("no position estimates to fuse")
    ordered = sorted(
        estimates, key=lambda e: (e[0].x, e[0].y, e[0].z)
    )
    pts = np.array([p.as_array() for p, _ in ordered])
    sig = np.array([[_floored(v) for v in s.as_array()] for _, s in ordered])
    w = 1.0 / sig**2
    wsum = w.sum(axis=0)
    fused = (w * pts).sum(axis=0) / wsum
    fused_sigma = np.sqrt(1.0 / wsum)
    return Point3.from_array(fused), TranslationSigma(*map(float, fused_sigma))


def fuse_rotations(
    estimates: Sequence[tuple[Rotation, float]],
) -> Rotation:
    """Weighted chordal mean of rotations.

    Computes the principal eigenvector of the weighted quaternion
    outer-product sum, which minimizes the weighted chordal distance to
    the inputs and is insensitive to quaternion sign. The result is
    sign-canonicalized (w >= 0).
    """
    if not estimates:
        raise EmptyFusionError("no rotations to fuse")
    m = np.zeros((4, 4))
    for rot, weight in estimates:
        if weight <= 0:
            raise ValueError("rotation weights must be positive")
        q = rot.as_quat()
        m += weight * np.outer(q, q)
    vals, vecs = np.linalg.eigh(m)
    return Rotation.from_quat(vecs[:, np.argmax(vals)])
