"""Single-demonstration capture and open-loop replay."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BelowTable, InvalidParams
from .geometry import PlanarPose, RigidTransform, Twist, integrate_twist, lift_planar, yaw_of

FORMAT = "coarse2fine-demo/1"
MAX_LINEAR_SPEED = 1.5  # m/s
MAX_ANGULAR_SPEED = 2 * math.pi  # rad/s

TwistStep = tuple[Twist, float]


@dataclass(frozen=True, eq=False)
class Demonstration:
    initial_pose: RigidTransform
    bottleneck_vertical: RigidTransform
    reorient: RigidTransform
    height: float
    twists: tuple[TwistStep, ...]
    rate: float

    @property
    def duration(self) -> float:
        return float(sum(dt for _, dt in self.twists))

    def bottleneck_planar(self) -> PlanarPose:
        t = self.bottleneck_vertical
        return PlanarPose(t.translation[0], t.translation[1], yaw_of(t.rotation))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(demo_to_dict(self), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> Demonstration:
        return demo_from_dict(json.loads(Path(path).read_text()))


def record_demo(initial: RigidTransform, twists: Sequence[TwistStep], rate: float,
                table_height: float = 0.0) -> Demonstration:
    """Build a demonstration whose bottleneck is the verticalized initial pose.

    The bottleneck keeps the initial position and heading; ``reorient`` is
    the remaining tilt so that bottleneck_rotation @ reorient_rotation
    reproduces the initial orientation.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    z = float(initial.translation[2])
    if z <= table_height:
        raise BelowTable(f"demonstration starts at z={z:.4f}, table is at {table_height:.4f}")
    yaw = yaw_of(initial.rotation)
    b = lift_planar(PlanarPose(initial.translation[0], initial.translation[1], yaw), z)
    reorient = RigidTransform.from_rotation(b.rotation.T @ initial.rotation)
    steps = tuple((tw, float(dt)) for tw, dt in twists)
    for _, dt in steps:
        if not dt > 0:
            raise ValueError("every twist step needs dt > 0")
    return Demonstration(initial, b, reorient, z, steps, float(rate))


def replay(demo: Demonstration, start: RigidTransform) -> list[RigidTransform]:
    """Open-loop integration of the recorded body twists from ``start``."""
    poses = [start]
    pose = start
    for tw, dt in demo.twists:
        pose = integrate_twist(pose, tw, dt)
        poses.append(pose)
    return poses


def _constant(linear, angular, duration: float, rate: float) -> list[TwistStep]:
    n = int(round(duration * rate))
    if n < 1 or not math.isclose(n, duration * rate, rel_tol=0, abs_tol=1e-6):
        raise InvalidParams(f"duration {duration} s is not a whole number of steps at {rate} Hz")
    tw = Twist(linear, angular)
    return [(tw, 1.0 / rate)] * n


def scripted_demo(kind: str, rate: float = 30.0, **params) -> list[TwistStep]:
    """Deterministic body-twist programs standing in for human demonstrations.

    Local frame: z up, the tool points along -z.

    insert:       depth, speed
    twist_insert: depth, speed, angle, angular_speed
    scoop:        depth, sweep, lift, speed
    hammer:       strokes, stroke, advance, speed
    """
    if not rate > 0:
        raise InvalidParams("rate must be positive")
    p = dict(params)

    def get(name, default):
        v = float(p.pop(name, default))
        if not (math.isfinite(v) and v > 0):
            raise InvalidParams(f"{name} must be positive and finite, got {v}")
        return v

    if kind == "insert":
        depth, speed = get("depth", 0.05), get("speed", 0.05)
        _check_speed(speed)
        out = _constant((0, 0, -speed), (0, 0, 0), depth / speed, rate)
    elif kind == "twist_insert":
        depth, speed = get("depth", 0.03), get("speed", 0.05)
        angle, wspeed = get("angle", math.pi / 2), get("angular_speed", math.pi / 4)
        _check_speed(speed, wspeed)
        out = (_constant((0, 0, -speed), (0, 0, 0), depth / speed, rate)
               + _constant((0, 0, 0), (0, 0, wspeed), angle / wspeed, rate))
    elif kind == "scoop":
        depth, sweep, lift, speed = get("depth", 0.03), get("sweep", 0.08), get("lift", 0.06), get("speed", 0.1)
        _check_speed(speed)
        out = (_constant((0, 0, -speed), (0, 0, 0), depth / speed, rate)
               + _constant((speed, 0, 0), (0, 0, 0), sweep / speed, rate)
               + _constant((0, 0, speed), (0, 0, 0), lift / speed, rate))
    elif kind == "hammer":
        strokes = int(get("strokes", 3))
        stroke, advance, speed = get("stroke", 0.06), get("advance", 0.01), get("speed", 0.3)
        if advance >= stroke:
            raise InvalidParams("advance per stroke must be smaller than the stroke")
        _check_speed(speed)
        down = _constant((0, 0, -speed), (0, 0, 0), stroke / speed, rate)
        up = _constant((0, 0, speed), (0, 0, 0), (stroke - advance) / speed, rate)
        out = (down + up) * strokes
    else:
        raise InvalidParams(f"unknown demo kind {kind!r}")
    if p:
        raise InvalidParams(f"unexpected parameters for {kind}: {sorted(p)}")
    return out


def _check_speed(linear: float, angular: float = 0.0) -> None:
    if linear > MAX_LINEAR_SPEED or angular > MAX_ANGULAR_SPEED:
        raise InvalidParams("speed exceeds the configured limits")


def demo_to_dict(demo: Demonstration) -> dict:
    def flat(t: RigidTransform) -> list[float]:
        return [float(v) for v in t.matrix.reshape(-1)]

    return {
        "format": FORMAT,
        "rate": demo.rate,
        "height": demo.height,
        "initial_pose": flat(demo.initial_pose),
        "bottleneck_vertical": flat(demo.bottleneck_vertical),
        "reorient": flat(demo.reorient),
        "twists": [{"twist": [float(v) for v in tw.as_vector()], "dt": dt} for tw, dt in demo.twists],
    }


def demo_from_dict(d: dict) -> Demonstration:
    if d.get("format") != FORMAT:
        raise ValueError(f"unsupported demo format {d.get('format')!r}")

    def tf(v) -> RigidTransform:
        return RigidTransform.from_matrix(np.array(v, dtype=float).reshape(4, 4))

    twists = tuple((Twist.from_vector(s["twist"]), float(s["dt"])) for s in d["twists"])
    return Demonstration(tf(d["initial_pose"]), tf(d["bottleneck_vertical"]), tf(d["reorient"]),
                         float(d["height"]), twists, float(d["rate"]))
