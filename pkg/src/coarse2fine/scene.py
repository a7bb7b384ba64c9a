"""Simulated tabletop: object placement, bottleneck and the linear approach controller.

Kinematics are perfect: the end-effector goes exactly where it is commanded,
so every reaching error comes from sensing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .geometry import (
    PlanarPose,
    RigidTransform,
    compose,
    inverse,
    lift_planar,
    rotz,
    to_planar,
    wrap_angle,
)

Mode = Literal["train", "test"]
SeedLike = int | Sequence[int] | np.random.SeedSequence


@dataclass(frozen=True)
class SceneConfig:
    """Tabletop geometry and controller settings (meters, radians, seconds)."""

    task_space_side: float = 0.40
    approach_height: float = 0.50
    table_height: float = 0.0
    object_yaw_range: float = math.pi / 2
    controller_speed: float = 0.1
    dt: float = 1.0 / 30.0
    # bottleneck in the object frame, expressed relative to the table surface
    bottleneck_x: float = 0.0
    bottleneck_y: float = 0.0
    bottleneck_height: float = 0.10
    bottleneck_yaw: float = 0.0

    def __post_init__(self):
        for name in ("task_space_side", "approach_height", "controller_speed", "dt", "bottleneck_height"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 <= self.object_yaw_range <= 2 * math.pi:
            raise ValueError("object_yaw_range must lie in [0, 2*pi]")
        if self.approach_height <= self.bottleneck_height:
            raise ValueError("approach_height must be above bottleneck_height")

    @property
    def h(self) -> float:
        """Absolute height of the bottleneck above the base origin."""
        return self.table_height + self.bottleneck_height

    @property
    def bottleneck_offset(self) -> RigidTransform:
        """Bottleneck pose in the object frame."""
        return RigidTransform(rotz(self.bottleneck_yaw),
                              np.array([self.bottleneck_x, self.bottleneck_y, self.bottleneck_height]))


def object_transform(object_pose: PlanarPose, table_height: float) -> RigidTransform:
    return lift_planar(object_pose, table_height)


@dataclass(frozen=True)
class WorldState:
    object_pose: PlanarPose
    ee_pose: RigidTransform
    bottleneck_true: RigidTransform
    bottleneck_offset: RigidTransform = field(repr=False)
    table_height: float = 0.0

    def with_ee(self, ee_pose: RigidTransform) -> WorldState:
        return replace(self, ee_pose=ee_pose)

    @property
    def object_frame(self) -> RigidTransform:
        return object_transform(self.object_pose, self.table_height)

    @property
    def h(self) -> float:
        return float(self.bottleneck_true.translation[2])


def make_world(cfg: SceneConfig, object_pose: PlanarPose, ee_pose: RigidTransform | None = None) -> WorldState:
    offset = cfg.bottleneck_offset
    t_rb = compose(object_transform(object_pose, cfg.table_height), offset)
    if ee_pose is None:
        ee_pose = lift_planar(PlanarPose(0.0, 0.0, 0.0), cfg.table_height + cfg.approach_height)
    return WorldState(object_pose, ee_pose, t_rb, offset, cfg.table_height)


def place_object(cfg: SceneConfig, rng_seed: SeedLike, mode: Mode) -> WorldState:
    """Object at the task-space centre (train) or uniformly in the task space (test)."""
    if mode == "train":
        pose = PlanarPose(0.0, 0.0, 0.0)
    elif mode == "test":
        rng = np.random.default_rng(rng_seed)
        half = cfg.task_space_side / 2
        x, y = rng.uniform(-half, half, size=2)
        yaw = rng.uniform(-cfg.object_yaw_range / 2, cfg.object_yaw_range / 2)
        pose = PlanarPose(x, y, yaw)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return make_world(cfg, pose)


def sample_approach_start(cfg: SceneConfig, rng_seed: SeedLike, mode: Mode) -> RigidTransform:
    z = cfg.table_height + cfg.approach_height
    if mode == "test":
        return lift_planar(PlanarPose(0.0, 0.0, 0.0), z)
    if mode != "train":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(rng_seed)
    half = cfg.task_space_side / 2
    x, y = rng.uniform(-half, half, size=2)
    yaw = rng.uniform(-cfg.object_yaw_range / 2, cfg.object_yaw_range / 2)
    return lift_planar(PlanarPose(x, y, yaw), z)


def linear_step(ee: RigidTransform, target: RigidTransform, speed: float, dt: float) -> RigidTransform:
    """One control step along the straight line from ``ee`` to ``target``.

    Both poses are assumed vertical. Yaw follows the shortest arc in
    proportion to the distance covered.
    """
    if not (speed > 0 and dt > 0):
        raise ValueError("speed and dt must be positive")
    delta = target.translation - ee.translation
    remaining = float(np.linalg.norm(delta))
    step = speed * dt
    yaw0 = math.atan2(ee.rotation[1, 0], ee.rotation[0, 0])
    yaw1 = math.atan2(target.rotation[1, 0], target.rotation[0, 0])
    # relative tolerance stops float residue from adding a spurious extra step
    if remaining <= step * (1 + 1e-9):
        return RigidTransform(rotz(yaw1), target.translation)
    frac = step / remaining
    yaw = yaw0 + frac * wrap_angle(yaw1 - yaw0)
    return RigidTransform(rotz(yaw), ee.translation + frac * delta)


def steps_to_reach(distance: float, speed: float, dt: float) -> int:
    return max(0, math.ceil(distance / (speed * dt) * (1 - 1e-9)))


def true_relative_bottleneck(w: WorldState) -> RigidTransform:
    """Ground-truth T_EB = T_ER T_RB."""
    return compose(inverse(w.ee_pose), w.bottleneck_true)


def true_bottleneck_planar(w: WorldState) -> PlanarPose:
    return to_planar(w.bottleneck_true, w.h)
