"""Rigid 3D geometry: frames, quaternion rotations, and transforms.

Conventions used throughout the package:
    - Lengths are millimeters, image coordinates are pixels, reported
      angles are degrees.
    - Quaternions are stored (w, x, y, z) with w >= 0 canonical sign.
    - A RigidTransform carries explicit frame ids and maps points from
      ``from_frame`` coordinates to ``to_frame`` coordinates:
      ``x_to = R @ x_from + t``.
    - ``compose(a, b)`` applies ``b`` first, then ``a``; composition is
      only permitted when the frame ids chain.

Frame ids are plain strings: ``world``, ``head``, ``coil``,
``camera:<j>``, ``tag:<id>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WORLD = "world"
HEAD = "head"
COIL = "coil"


def camera_frame(camera_id: int) -> str:
    return f"camera:{camera_id}"


def tag_frame(tag_id: int) -> str:
    return f"tag:{tag_id}"


class FrameMismatchError(ValueError):
    """Raised when two transforms are composed across unrelated frames."""

    def __init__(self, inner_from: str, outer_to: str):
        self.inner_from = inner_from
        self.outer_to = outer_to
        super().__init__(
            f"cannot chain transforms: inner maps into frame "
            f"{inner_from!r} but outer maps from frame {outer_to!r}"
        )


@dataclass(frozen=True)
class Point3:
    """A 3D point or vector in millimeters."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Point3":
        a = np.asarray(a, dtype=float).reshape(3)
        return Point3(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class Point2:
    """A 2D image point in pixels (sub-pixel, never rounded)."""

    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


def _canonical_quat(q: np.ndarray) -> tuple[float, float, float, float]:
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("quaternion has zero or non-finite norm")
    q = q / n
    # Canonical sign: w >= 0; on the w == 0 great circle pick the first
    # non-zero component positive so the representation is deterministic.
    for c in q:
        if c < 0.0:
            q = -q
            break
        if c > 0.0:
            break
    return (float(q[0]), float(q[1]), float(q[2]), float(q[3]))


@dataclass(frozen=True)
class Rotation:
    """A 3D rotation stored as a unit quaternion (w, x, y, z)."""

    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_quat(q) -> "Rotation":
        return Rotation(*_canonical_quat(np.asarray(q, dtype=float)))

    @staticmethod
    def from_matrix(m) -> "Rotation":
        m = np.asarray(m, dtype=float).reshape(3, 3)
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0:
            s = 0.5 / math.sqrt(t + 1.0)
            q = np.array(
                [0.25 / s, (m[2, 1] - m[1, 2]) * s, (m[0, 2] - m[2, 0]) * s,
                 (m[1, 0] - m[0, 1]) * s]
            )
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            q = np.array(
                [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s,
                 (m[0, 2] + m[2, 0]) / s]
            )
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            q = np.array(
                [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s,
                 (m[1, 2] + m[2, 1]) / s]
            )
        else:
            s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            q = np.array(
                [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
                 (m[1, 2] + m[2, 1]) / s, 0.25 * s]
            )
        return Rotation(*_canonical_quat(q))

    @staticmethod
    def from_axis_angle(axis, angle_rad: float) -> "Rotation":
        axis = np.asarray(axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if n == 0.0:
            return Rotation.identity()
        axis = axis / n
        h = 0.5 * angle_rad
        s = math.sin(h)
        return Rotation.from_quat(
            [math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s]
        )

    @staticmethod
    def from_rotvec(rv) -> "Rotation":
        rv = np.asarray(rv, dtype=float).reshape(3)
        angle = np.linalg.norm(rv)
        if angle == 0.0:
            return Rotation.identity()
        return Rotation.from_axis_angle(rv, angle)

    @staticmethod
    def rot_x(deg: float) -> "Rotation":
        return Rotation.from_axis_angle([1, 0, 0], math.radians(deg))

    @staticmethod
    def rot_y(deg: float) -> "Rotation":
        return Rotation.from_axis_angle([0, 1, 0], math.radians(deg))

    @staticmethod
    def rot_z(deg: float) -> "Rotation":
        return Rotation.from_axis_angle([0, 0, 1], math.radians(deg))

    def as_quat(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=float,
        )

    def apply(self, p) -> np.ndarray:
        return self.as_matrix() @ np.asarray(p, dtype=float).reshape(3)

    def __mul__(self, other: "Rotation") -> "Rotation":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation.from_quat(
            [
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            ]
        )

    def inverse(self) -> "Rotation":
        return Rotation.from_quat([self.w, -self.x, -self.y, -self.z])


def angular_distance(a: Rotation, b: Rotation) -> float:
    """Geodesic angle between two rotations, in degrees, in [0, 180].

    Insensitive to the quaternion double cover (q and -q are the same
    rotation).
    """
    # Relative quaternion a^-1 * b; atan2 keeps full precision for tiny
    # angles where an acos of the dot product would saturate.
    rel = (a.inverse() * b).as_quat()
    return math.degrees(2.0 * math.atan2(float(np.linalg.norm(rel[1:])),
                                         abs(float(rel[0]))))


@dataclass(frozen=True)
class RigidTransform:
    """Rigid motion mapping points from ``from_frame`` to ``to_frame``."""

    rotation: Rotation
    translation: Point3
    from_frame: str
    to_frame: str

    @staticmethod
    def identity(frame: str = WORLD) -> "RigidTransform":
        return RigidTransform(Rotation.identity(), Point3(0, 0, 0), frame, frame)

    @staticmethod
    def make(rotation: Rotation, translation, from_frame: str,
             to_frame: str) -> "RigidTransform":
        if not isinstance(translation, Point3):
            translation = Point3.from_array(translation)
        return RigidTransform(rotation, translation, from_frame, to_frame)

    def apply(self, p) -> np.ndarray:
        return self.rotation.apply(p) + self.translation.as_array()

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.as_matrix()
        m[:3, 3] = self.translation.as_array()
        return m

    @staticmethod
    def from_matrix(m, from_frame: str, to_frame: str) -> "RigidTransform":
        m = np.asarray(m, dtype=float).reshape(4, 4)
        return RigidTransform.make(
            Rotation.from_matrix(m[:3, :3]), m[:3, 3], from_frame, to_frame
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chain two transforms; ``b`` is applied first: x -> a(b(x)).

    Requires ``a.from_frame == b.to_frame``; the result maps
    ``b.from_frame`` to ``a.to_frame``. The rotation product is
    re-normalized by construction (quaternion product + unit norm).
    """
    if a.from_frame != b.to_frame:
        raise FrameMismatchError(b.to_frame, a.from_frame)
    rot = a.rotation * b.rotation
    t = a.rotation.apply(b.translation.as_array()) + a.translation.as_array()
    return RigidTransform.make(rot, t, b.from_frame, a.to_frame)


def compose_chain(*transforms: RigidTransform) -> RigidTransform:
    """compose(...) over several transforms; the right-most applies first."""
    out = transforms[0]
    for t in transforms[1:]:
        out = compose(out, t)
    return out


def invert(t: RigidTransform) -> RigidTransform:
    """Inverse transform with from/to frames swapped."""
    rot = t.rotation.inverse()
    trans = -rot.apply(t.translation.as_array())
    return RigidTransform.make(rot, trans, t.to_frame, t.from_frame)
