"""Frame algebra: rotations, rigid transforms, frame checking."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidunav.geometry import (
    FrameMismatchError,
    Point3,
    RigidTransform,
    Rotation,
    WORLD,
    angular_distance,
    compose,
    compose_chain,
    invert,
)

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@st.composite
def rotations(draw):
    q = np.array([draw(finite) for _ in range(4)])
    if np.linalg.norm(q) < 1e-3:
        q = np.array([1.0, 0.0, 0.0, 0.0])
    return Rotation.from_quat(q)


@st.composite
def transforms(draw, from_frame="a", to_frame="b"):
    t = [draw(st.floats(min_value=-1000, max_value=1000, allow_nan=False))
         for _ in range(3)]
    return RigidTransform.make(draw(rotations()), t, from_frame, to_frame)


class TestRotation:
    def test_identity_is_unit_quaternion(self):
        r = Rotation.identity()
        assert (r.w, r.x, r.y, r.z) == (1.0, 0.0, 0.0, 0.0)

    def test_canonical_sign_w_nonnegative(self):
        r = Rotation.from_quat([-1.0, 0.0, 0.0, 0.0])
        assert r.w == 1.0

    @given(rotations())
    @settings(max_examples=200)
    def test_matrix_roundtrip(self, r):
        back = Rotation.from_matrix(r.as_matrix())
        assert angular_distance(r, back) < 1e-9

    @given(rotations())
    def test_matrix_is_orthonormal(self, r):
        m = r.as_matrix()
        assert np.allclose(m.T @ m, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(m) - 1.0) < 1e-9

    def test_axis_angle_matches_elementary(self):
        a = Rotation.from_axis_angle([0, 0, 1], math.radians(90.0))
        b = Rotation.rot_z(90.0)
        assert angular_distance(a, b) < 1e-12

    @given(rotations())
    def test_inverse_composes_to_identity(self, r):
        assert angular_distance(r * r.inverse(), Rotation.identity()) < 1e-9


class TestAngularDistance:
    def test_self_distance_zero(self):
        r = Rotation.rot_y(33.0)
        assert angular_distance(r, r) == 0.0

    def test_known_angle(self):
        assert abs(angular_distance(Rotation.identity(), Rotation.rot_x(30.0))
                   - 30.0) < 1e-9

    def test_double_cover(self):
        r = Rotation.rot_z(40.0)
        neg = Rotation(-r.w, -r.x, -r.y, -r.z)  # bypasses canonicalization
        assert angular_distance(r, Rotation.from_quat(neg.as_quat())) < 1e-12

    @given(rotations(), rotations())
    def test_symmetry(self, a, b):
        assert abs(angular_distance(a, b) - angular_distance(b, a)) < 1e-9

    @given(rotations(), rotations(), rotations())
    @settings(max_examples=100)
    def test_triangle_inequality(self, a, b, c):
        assert (angular_distance(a, c)
                <= angular_distance(a, b) + angular_distance(b, c) + 1e-9)

    def test_range(self):
        assert 0.0 <= angular_distance(Rotation.identity(),
                                       Rotation.rot_x(179.5)) <= 180.0


class TestCompose:
    def test_identity_neutral(self):
        t = RigidTransform.make(Rotation.rot_z(17.0), (1, 2, 3), WORLD, WORLD)
        out = compose(t, RigidTransform.identity())
        assert angular_distance(out.rotation, t.rotation) < 1e-12
        assert np.allclose(out.translation.as_array(), t.translation.as_array())

    def test_rotation_translation_chain(self):
        a = RigidTransform.make(Rotation.rot_z(90.0), (1, 0, 0), "mid", "top")
        b = RigidTransform.make(Rotation.rot_z(90.0), (0, 0, 0), "base", "mid")
        out = compose(a, b)
        assert angular_distance(out.rotation, Rotation.rot_z(180.0)) < 1e-9
        assert np.allclose(out.translation.as_array(), [1, 0, 0])
        assert out.from_frame == "base" and out.to_frame == "top"

    def test_frame_mismatch_raises_with_names(self):
        a = RigidTransform.identity("a")
        b = RigidTransform.identity("b")
        with pytest.raises(FrameMismatchError, match="'a'.*'b'|'b'.*'a'"):
            compose(a, b)

    def test_compose_chain_order(self):
        c = RigidTransform.make(Rotation.identity(), (0, 0, 1), "x", "y")
        d = RigidTransform.make(Rotation.identity(), (0, 1, 0), "y", "z")
        e = RigidTransform.make(Rotation.identity(), (1, 0, 0), "z", "w")
        out = compose_chain(e, d, c)
        assert np.allclose(out.translation.as_array(), [1, 1, 1])
        assert out.from_frame == "x" and out.to_frame == "w"


class TestInvert:
    def test_identity(self):
        out = invert(RigidTransform.identity())
        assert np.allclose(out.translation.as_array(), [0, 0, 0])

    def test_pure_translation(self):
        t = RigidTransform.make(Rotation.identity(), (1, 2, 3), "a", "b")
        out = invert(t)
        assert np.allclose(out.translation.as_array(), [-1, -2, -3])
        assert out.from_frame == "b" and out.to_frame == "a"

    @given(transforms())
    @settings(max_examples=200)
    def test_involution(self, t):
        back = invert(invert(t))
        assert angular_distance(back.rotation, t.rotation) < 1e-9
        assert np.allclose(back.translation.as_array(),
                           t.translation.as_array(), atol=1e-9)

    @given(transforms())
    @settings(max_examples=200)
    def test_compose_with_inverse_is_identity(self, t):
        out = compose(invert(t), t)
        assert angular_distance(out.rotation, Rotation.identity()) < 1e-9 * 180 / math.pi
        assert np.linalg.norm(out.translation.as_array()) < 1e-9


class TestPoints:
    def test_norm(self):
        assert Point3(3.0, 4.0, 0.0).norm() == 5.0

    def test_array_roundtrip(self):
        p = Point3(1.5, -2.0, 7.25)
        assert Point3.from_array(p.as_array()) == p

    def test_transform_apply(self):
        t = RigidTransform.make(Rotation.rot_z(90.0), (1, 0, 0), "a", "b")
        assert np.allclose(t.apply([1, 0, 0]), [1, 1, 0], atol=1e-12)
