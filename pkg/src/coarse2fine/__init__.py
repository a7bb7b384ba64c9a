"""Coarse-to-fine imitation: bottleneck-pose estimation, linear approach and demo replay
in a kinematic tabletop simulator."""

from .geometry import PlanarPose, RigidTransform, Twist, compose, inverse
from .estimation import Estimate, EstimatorKind, run_estimator, update
from .sensor import NoiseModel, Observation
from .scene import SceneConfig, WorldState

__version__ = "0.1.0"

__all__ = [
    "Estimate", "EstimatorKind", "NoiseModel", "Observation", "PlanarPose", "RigidTransform",
    "SceneConfig", "Twist", "WorldState", "compose", "inverse", "run_estimator", "update",
]
