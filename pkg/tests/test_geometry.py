import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarse2fine.errors import NotVertical
from coarse2fine.geometry import (
    PlanarPose,
    RigidTransform,
    Twist,
    bottleneck_in_base,
    compose,
    integrate_twist,
    inverse,
    lift_planar,
    relative_bottleneck,
    rotation_angle,
    rotx,
    rotz,
    to_planar,
    wrap_angle,
    yaw_of,
)
from oracles import homogeneous, matmul4, random_rotation, rx, rz, euler_integrate

I = RigidTransform.identity()


def tf(rot, trans=(0, 0, 0)):
    return RigidTransform(rot, np.array(trans, dtype=float))


def random_tf(rng, scale=1.0):
    return RigidTransform(random_rotation(rng), rng.uniform(-scale, scale, 3))


angles = st.floats(-10.0, 10.0, allow_nan=False)
coords = st.floats(-1.0, 1.0, allow_nan=False)


class TestRigidTransform:
    def test_rejects_non_rotation(self):
        with pytest.raises(ValueError):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
        with pytest.raises(ValueError):
            RigidTransform(2 * np.eye(3), np.zeros(3))
        with pytest.raises(ValueError):
            RigidTransform(np.full((3, 3), np.nan), np.zeros(3))
        with pytest.raises(ValueError):
            RigidTransform(np.eye(3), np.array([0, np.inf, 0]))

    def test_immutable(self):
        t = RigidTransform.from_translation(1, 2, 3)
        with pytest.raises(ValueError):
            t.translation[0] = 5.0

    def test_matrix_roundtrip(self):
        t = tf(rz(30), (0.1, 0.2, 0.3))
        assert RigidTransform.from_matrix(t.matrix).allclose(t, 0)


class TestCompose:
    def test_identity(self):
        t = tf(rz(40) @ rx(12), (0.3, -0.2, 0.7))
        assert compose(I, t).allclose(t, 1e-15)
        assert compose(t, I).allclose(t, 1e-15)

    def test_with_inverse(self):
        t = tf(rz(40) @ rx(12), (0.3, -0.2, 0.7))
        assert compose(t, inverse(t)).allclose(I, 1e-9)

    def test_matrix_product_oracle(self):
        a = RigidTransform.from_translation(0.1, 0.0, 0.5)
        b = compose(tf(rotz(math.pi / 2)), RigidTransform.from_translation(0.2, 0.1, 0.0))
        expected = np.array([[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.2],
                             [0.0, 0.0, 1.0, 0.5], [0.0, 0.0, 0.0, 1.0]])
        oracle = matmul4(homogeneous(np.eye(3), [0.1, 0, 0.5]),
                         matmul4(homogeneous(rz(90), [0, 0, 0]), homogeneous(np.eye(3), [0.2, 0.1, 0])))
        np.testing.assert_allclose(oracle, expected, atol=1e-15)
        np.testing.assert_allclose(compose(a, b).matrix, expected, atol=1e-15)

    def test_random_against_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b = random_tf(rng), random_tf(rng)
            np.testing.assert_allclose(compose(a, b).matrix, matmul4(a.matrix, b.matrix), atol=1e-12)

    def test_associative(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c = random_tf(rng), random_tf(rng), random_tf(rng)
            assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)), 1e-9)

    def test_matmul_operator(self):
        a, b = tf(rz(10), (1, 0, 0)), tf(rx(20), (0, 1, 0))
        assert (a @ b).allclose(compose(a, b), 0)


class TestInverse:
    def test_identity(self):
        assert inverse(I).allclose(I, 0)

    def test_translation(self):
        np.testing.assert_array_equal(inverse(RigidTransform.from_translation(1, 2, 3)).translation, [-1, -2, -3])

    def test_rotated(self):
        t = compose(tf(rotz(math.radians(30))), RigidTransform.from_translation(0.5, 0, 0))
        assert compose(t, inverse(t)).allclose(I, 1e-12)
        assert compose(inverse(t), t).allclose(I, 1e-12)
        np.testing.assert_allclose(inverse(t).matrix, np.linalg.inv(t.matrix), atol=1e-12)

    def test_fuzz_against_lu(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            t = random_tf(rng, 2.0)
            np.testing.assert_allclose(inverse(t).matrix, np.linalg.inv(t.matrix), atol=1e-12)


class TestBottleneckInBase:
    def test_identity_ee(self):
        t = tf(rz(70), (0.1, 0.2, 0.3))
        assert bottleneck_in_base(I, t).allclose(t, 0)

    def test_round_trip_fuzz(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(1000):
            t_re, t_rb = random_tf(rng), random_tf(rng)
            t_eb = relative_bottleneck(t_re, t_rb)
            got = bottleneck_in_base(t_re, t_eb)
            worst = max(worst, np.abs(got.matrix - t_rb.matrix).max())
        assert worst < 1e-9


class TestPlanar:
    def test_identity_at_height(self):
        assert to_planar(RigidTransform.from_translation(0, 0, 0.3), 0.3) == PlanarPose(0, 0, 0)

    def test_direct_extraction(self):
        h = 0.25
        t = compose(RigidTransform.from_translation(0.2, -0.1, h), tf(rotz(math.pi / 4)))
        p = to_planar(t, h)
        assert p.x == pytest.approx(0.2, abs=1e-15)
        assert p.y == pytest.approx(-0.1, abs=1e-15)
        assert p.yaw == pytest.approx(math.pi / 4, abs=1e-15)

    def test_tilted_is_rejected(self):
        t = tf(rotx(math.radians(5)), (0, 0, 0.1))
        with pytest.raises(NotVertical):
            to_planar(t, 0.1)

    def test_wrong_height_is_rejected(self):
        with pytest.raises(NotVertical):
            to_planar(RigidTransform.from_translation(0, 0, 0.2), 0.1)

    def test_lift_origin(self):
        assert lift_planar(PlanarPose(0, 0, 0), 0.1).allclose(RigidTransform.from_translation(0, 0, 0.1), 0)

    def test_lift_yaw_columns(self):
        t = lift_planar(PlanarPose(0.1, 0.2, math.pi / 2), 0.1)
        np.testing.assert_allclose(t.rotation, rz(90), atol=1e-15)
        np.testing.assert_allclose(t.rotation[:, 0], [0, 1, 0], atol=1e-15)
        np.testing.assert_allclose(t.rotation[:, 1], [-1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(t.translation, [0.1, 0.2, 0.1])

    def test_round_trip_fuzz(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            p = PlanarPose(*rng.uniform(-1, 1, 2), rng.uniform(-math.pi, math.pi))
            h = rng.uniform(0, 1)
            q = to_planar(lift_planar(p, h), h)
            assert abs(q.x - p.x) < 1e-12 and abs(q.y - p.y) < 1e-12
            assert abs(wrap_angle(q.yaw - p.yaw)) < 1e-12

    @given(coords, coords, angles, st.floats(0, 1))
    def test_lift_then_reduce_is_identity(self, x, y, yaw, h):
        t = lift_planar(PlanarPose(x, y, yaw), h)
        assert lift_planar(to_planar(t, h), h).allclose(t, 1e-9)

    @given(coords, coords, angles)
    def test_yaw_in_half_open_interval(self, x, y, yaw):
        p = PlanarPose(x, y, yaw)
        assert -math.pi < p.yaw <= math.pi

    def test_wrap_tie_goes_positive(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


class TestYawOf:
    def test_tilted_heading(self):
        assert yaw_of(rz(25) @ rx(10)) == pytest.approx(math.radians(25), abs=1e-12)

    def test_x_axis_vertical_falls_back(self):
        # x-axis points straight down after 90 deg pitch
        r = rz(40) @ np.array([[0, 0, 1.0], [0, 1, 0], [-1, 0, 0]])
        assert yaw_of(r) == pytest.approx(math.radians(40), abs=1e-12)


class TestIntegrateTwist:
    def test_zero_twist(self):
        t = tf(rz(20) @ rx(5), (0.1, 0.2, 0.3))
        assert integrate_twist(t, Twist.zero(), 1 / 30).allclose(t, 1e-15)

    def test_constant_linear(self):
        start = tf(rz(90), (0.0, 0.0, 0.5))
        pose = start
        tw = Twist([0.05, 0, 0], [0, 0, 0])
        for _ in range(60):
            pose = integrate_twist(pose, tw, 1 / 30)
        local = compose(inverse(start), pose).translation
        np.testing.assert_allclose(local, [0.1, 0, 0], atol=1e-6)

    def test_pure_rotation(self):
        start = RigidTransform.from_translation(0.3, -0.2, 0.4)
        omega, n = 0.7, 45
        pose = start
        for _ in range(n):
            pose = integrate_twist(pose, Twist([0, 0, 0], [0, 0, omega]), 1 / 30)
        assert yaw_of(pose.rotation) == pytest.approx(omega * n / 30, abs=1e-9)
        np.testing.assert_allclose(pose.translation, start.translation, atol=1e-12)

    def test_screw_against_fine_euler(self):
        lin, ang, dt = np.array([0.1, -0.05, 0.02]), np.array([0.3, 0.4, -1.2]), 0.5
        start = tf(rz(15), (0.1, 0.1, 0.2))
        got = integrate_twist(start, Twist(lin, ang), dt)
        ref = euler_integrate(start.matrix, lin, ang, dt, 20000)
        np.testing.assert_allclose(got.matrix, ref, atol=1e-7)

    def test_result_is_orthonormal(self):
        rng = np.random.default_rng(6)
        pose = I
        for _ in range(2000):
            pose = integrate_twist(pose, Twist(rng.normal(size=3), rng.normal(size=3)), 1 / 30)
        r = pose.rotation
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(r) - 1) < 1e-12

    def test_requires_positive_dt(self):
        with pytest.raises(ValueError):
            integrate_twist(I, Twist.zero(), 0.0)

    def test_rigid_offset_transport(self):
        rng = np.random.default_rng(7)
        twists = [Twist(rng.normal(0, 0.1, 3), rng.normal(0, 0.5, 3)) for _ in range(90)]
        p0 = random_tf(rng)
        q0 = compose(p0, random_tf(rng, 0.05))
        p, q = p0, q0
        for tw in twists:
            p, q = integrate_twist(p, tw, 1 / 30), integrate_twist(q, tw, 1 / 30)
            assert q.allclose(compose(q0, compose(inverse(p0), p)), 1e-6)

    def test_rotation_angle(self):
        assert rotation_angle(rz(33)) == pytest.approx(math.radians(33))
        assert rotation_angle(np.eye(3)) == 0.0
