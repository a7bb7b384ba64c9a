"""Rigid-transform and planar-pose algebra.

Frames: ``R`` is the robot base, ``E`` the end-effector (camera rigidly
attached) and ``B`` the bottleneck. ``T_xy`` is frame ``y`` expressed in
frame ``x``.

Axis convention: the base z-axis points up, away from the table. A pose is
*vertical* when its rotation is a pure yaw about the base z-axis, so the
end-effector z-axis is parallel to the world vertical and the tool/camera
looks along its local -z, straight down at the table. The identity rotation
is therefore vertical, and a vertical pose is fully described by
``(x, y, yaw)`` once its height is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotVertical

ORTHONORMAL_TOL = 1e-6
VERTICAL_TOL = 1e-6

_I3 = np.eye(3)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


def rotz(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotx(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def roty(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def orthonormalize(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar factor) to ``r``."""
    u, _, vt = np.linalg.svd(r)
    q = u @ vt
    if np.linalg.det(q) < 0:
        u[:, -1] *= -1
        q = u @ vt
    return q


def _det3(r: np.ndarray) -> float:
    (a, b, c), (d, e, f), (g, h, i) = r.tolist()
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Homogeneous transform with a 3x3 rotation and a translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        trans = np.array(self.translation, dtype=float).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        err = np.abs(rot.T @ rot - _I3).max()
        # NaN fails both comparisons below, so non-finite rotations are rejected here too
        if not (err <= ORTHONORMAL_TOL and abs(_det3(rot) - 1.0) <= ORTHONORMAL_TOL):
            raise ValueError(f"rotation is not a proper rotation (orthonormality error {err:.2e})")
        if not np.isfinite(trans).all():
            raise ValueError("translation has non-finite entries")
        rot.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(_I3, np.zeros(3))

    @classmethod
    def from_translation(cls, x: float, y: float, z: float) -> RigidTransform:
        return cls(_I3, np.array([x, y, z]))

    @classmethod
    def from_rotation(cls, rotation: np.ndarray) -> RigidTransform:
        return cls(rotation, np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> RigidTransform:
        m = np.asarray(m, dtype=float).reshape(4, 4)
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise ValueError("bottom row of a homogeneous transform must be [0, 0, 0, 1]")
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return compose(self, other)

    def allclose(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(np.abs(self.matrix - other.matrix).max() <= atol)

    def __repr__(self) -> str:
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


@dataclass(frozen=True)
class PlanarPose:
    """Vertical pose reduced to two horizontal translations and a yaw."""

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw])

    @classmethod
    def from_array(cls, a) -> PlanarPose:
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True, eq=False)
class Twist:
    """Body-frame velocity: linear in m/s, angular in rad/s."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float).reshape(3)
        ang = np.array(self.angular, dtype=float).reshape(3)
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(ang))):
            raise ValueError("twist has non-finite components")
        lin.flags.writeable = False
        ang.flags.writeable = False
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "angular", ang)

    @classmethod
    def zero(cls) -> Twist:
        return cls(np.zeros(3), np.zeros(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])

    @classmethod
    def from_vector(cls, v) -> Twist:
        v = np.asarray(v, dtype=float)
        return cls(v[:3], v[3:6])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Twist):
            return NotImplemented
        return bool(np.array_equal(self.linear, other.linear) and np.array_equal(self.angular, other.angular))


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


def bottleneck_in_base(t_re: RigidTransform, t_eb: RigidTransform) -> RigidTransform:
    """Bottleneck pose in the base frame from a relative estimate: T_RB = T_RE T_EB."""
    return compose(t_re, t_eb)


def relative_bottleneck(t_re: RigidTransform, t_rb: RigidTransform) -> RigidTransform:
    """Bottleneck expressed in the end-effector frame: T_EB = T_ER T_RB."""
    return compose(inverse(t_re), t_rb)


def yaw_of(rotation: np.ndarray) -> float:
    """Heading of a (possibly tilted) rotation about the base z-axis.

    Uses the horizontal projection of the local x-axis, falling back to the
    local y-axis when x is close to vertical.
    """
    r = np.asarray(rotation)
    if math.hypot(r[0, 0], r[1, 0]) > 1e-6:
        return math.atan2(r[1, 0], r[0, 0])
    return wrap_angle(math.atan2(r[1, 1], r[0, 1]) - math.pi / 2)


def is_vertical(t: RigidTransform, tol: float = VERTICAL_TOL) -> bool:
    r = t.rotation
    return bool(abs(r[2, 2] - 1.0) <= tol and abs(r[0, 2]) <= tol and abs(r[1, 2]) <= tol
                and abs(r[2, 0]) <= tol and abs(r[2, 1]) <= tol)


def to_planar(t: RigidTransform, h: float) -> PlanarPose:
    """Reduce a vertical pose at known height ``h`` to (x, y, yaw)."""
    if not is_vertical(t):
        raise NotVertical("orientation is not a pure rotation about the vertical axis")
    if abs(t.translation[2] - h) > VERTICAL_TOL:
        raise NotVertical(f"pose height {t.translation[2]:.6f} does not match expected height {h:.6f}")
    return PlanarPose(t.translation[0], t.translation[1], math.atan2(t.rotation[1, 0], t.rotation[0, 0]))


def lift_planar(p: PlanarPose, h: float) -> RigidTransform:
    return RigidTransform(rotz(p.yaw), np.array([p.x, p.y, h]))


def twist_exp(v: Twist, dt: float) -> RigidTransform:
    """Closed-form SE(3) exponential of a constant body twist applied for ``dt``."""
    w = v.angular * dt
    u = v.linear * dt
    theta = float(np.linalg.norm(w))
    k = skew(w)
    k2 = k @ k
    if theta < 1e-8:
        # Taylor expansions of the Rodrigues coefficients
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
        c = 1.0 / 6.0 - theta**2 / 120.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
        c = (theta - math.sin(theta)) / theta**3
    rot = _I3 + a * k + b * k2
    jac = _I3 + b * k + c * k2
    return RigidTransform(rot, jac @ u)


def integrate_twist(pose: RigidTransform, v: Twist, dt: float) -> RigidTransform:
    """Advance ``pose`` by body twist ``v`` held for ``dt`` seconds."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    step = compose(pose, twist_exp(v, dt))
    return RigidTransform(orthonormalize(step.rotation), step.translation)


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, in radians."""
    c = (np.trace(rotation) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))
