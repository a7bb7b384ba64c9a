"""Synthetic bottleneck-pose regressor.

Stands in for the image-based networks: the true relative bottleneck pose is
corrupted with zero-mean Gaussian noise whose standard deviation grows
affinely with camera-to-bottleneck distance. Also covers self-supervised
dataset collection and fitting of the three uncertainty models (prior,
predicted, ensemble spread).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import EmptyDataset, InsufficientData, RegionViolation
from .geometry import PlanarPose, RigidTransform, lift_planar, to_planar, wrap_angle
from .scene import SceneConfig, WorldState, linear_step, sample_approach_start, true_relative_bottleneck

Region = Literal["approach", "last_inch"]

SIGMA_FLOOR = 1e-9
VALIDATION_FRACTION = 0.2
HEIGHT_TOL = 1e-6
MAE_TO_SIGMA = math.sqrt(math.pi / 2)

# half-widths of the uniform target boxes around the bottleneck (position m, yaw rad)
TARGET_BOX = {
    "approach": (0.025, math.radians(2.5)),
    "last_inch": (0.01, math.radians(10.0)),
}


@dataclass(frozen=True)
class NoiseModel:
    """sigma(d) = base + slope * d, separately for position and yaw."""

    pos_sigma_base: float = 0.004
    pos_sigma_slope: float = 0.02
    yaw_sigma_base: float = math.radians(4.0)
    yaw_sigma_slope: float = math.radians(20.0)
    ensemble_size: int = 10

    def __post_init__(self):
        vals = (self.pos_sigma_base, self.pos_sigma_slope, self.yaw_sigma_base, self.yaw_sigma_slope)
        if any(v < 0 for v in vals):
            raise ValueError("noise parameters must be non-negative")
        if self.ensemble_size < 2:
            raise ValueError("ensemble_size must be >= 2")

    @classmethod
    def zero(cls, ensemble_size: int = 10) -> NoiseModel:
        return cls(0.0, 0.0, 0.0, 0.0, ensemble_size)

    def sigma(self, distance: float) -> np.ndarray:
        """Per-dimension (x, y, yaw) standard deviation at ``distance`` meters."""
        sp = self.pos_sigma_base + self.pos_sigma_slope * distance
        sy = self.yaw_sigma_base + self.yaw_sigma_slope * distance
        return np.array([sp, sp, sy])

    def scaled(self, pos_factor: float, yaw_factor: float) -> NoiseModel:
        return NoiseModel(self.pos_sigma_base * pos_factor, self.pos_sigma_slope * pos_factor,
                          self.yaw_sigma_base * yaw_factor, self.yaw_sigma_slope * yaw_factor,
                          self.ensemble_size)


@dataclass(frozen=True, eq=False)
class Observation:
    """One sensor reading.

    ``predicted`` is the bottleneck relative to the end-effector unless the
    observation has been mapped into the base frame by :func:`to_base_frame`.
    ``dz`` is the known vertical offset of the bottleneck below/above the
    end-effector (from forward kinematics), needed to rebuild the 3D pose.
    """

    predicted: PlanarPose
    sigma: np.ndarray
    distance: float
    timestamp: int = 0
    dz: float = 0.0

    def __post_init__(self):
        s = np.maximum(np.asarray(self.sigma, dtype=float).reshape(3), SIGMA_FLOOR)
        object.__setattr__(self, "sigma", s)

    def with_sigma(self, sigma) -> Observation:
        return Observation(self.predicted, sigma, self.distance, self.timestamp, self.dz)


@dataclass(frozen=True)
class DatasetSample:
    true_relative: PlanarPose
    distance: float
    dz: float
    trajectory: int = 0


@dataclass(frozen=True)
class Dataset:
    samples: tuple[DatasetSample, ...]
    region: Region

    def __len__(self) -> int:
        return len(self.samples)

    def to_jsonl(self, path) -> None:
        lines = []
        for s in self.samples:
            lines.append(json.dumps({
                "x": s.true_relative.x, "y": s.true_relative.y, "yaw": s.true_relative.yaw,
                "distance": s.distance, "dz": s.dz, "trajectory": s.trajectory, "region": self.region,
            }))
        Path(path).write_text("".join(line + "\n" for line in lines))

    @classmethod
    def from_jsonl(cls, path, region: Region | None = None) -> Dataset:
        samples = []
        found = region
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            found = found or rec["region"]
            samples.append(DatasetSample(PlanarPose(rec["x"], rec["y"], rec["yaw"]),
                                         rec["distance"], rec["dz"], rec["trajectory"]))
        return cls(tuple(samples), found or "approach")


def _check_region(w: WorldState, region: Region) -> None:
    z, h = float(w.ee_pose.translation[2]), w.h
    if region == "approach":
        if z < h - HEIGHT_TOL:
            raise RegionViolation(f"end-effector at z={z:.4f} is below the bottleneck height {h:.4f}")
    elif region == "last_inch":
        if abs(z - h) > HEIGHT_TOL:
            raise RegionViolation(f"last-inch sensing needs z={h:.4f}, end-effector is at {z:.4f}")
    else:
        raise ValueError(f"unknown region {region!r}")


def corrupt(true_relative: PlanarPose, distance: float, model: NoiseModel,
            rng: np.random.Generator) -> tuple[PlanarPose, np.ndarray]:
    sigma = model.sigma(distance)
    noisy = true_relative.as_array() + sigma * rng.standard_normal(3)
    return PlanarPose.from_array(noisy), sigma


def _truth(w: WorldState) -> tuple[PlanarPose, float, float]:
    t_eb = true_relative_bottleneck(w)
    dz = float(t_eb.translation[2])
    return to_planar(t_eb, dz), float(np.linalg.norm(t_eb.translation)), dz


def observe(w: WorldState, model: NoiseModel, region: Region, rng: np.random.Generator,
            timestamp: int = 0) -> Observation:
    _check_region(w, region)
    truth, d, dz = _truth(w)
    predicted, sigma = corrupt(truth, d, model, rng)
    return Observation(predicted, sigma, d, timestamp, dz)


def observe_ensemble(w: WorldState, model: NoiseModel, region: Region, rng: np.random.Generator,
                     timestamp: int = 0) -> Observation:
    """Mean and spread of K independent predictions (dropout-style ensemble)."""
    _check_region(w, region)
    truth, d, dz = _truth(w)
    sigma = model.sigma(d)
    draws = truth.as_array() + sigma * rng.standard_normal((model.ensemble_size, 3))
    # unwrap yaw about the first draw before averaging
    ref = draws[0, 2]
    draws[:, 2] = ref + np.array([wrap_angle(a - ref) for a in draws[:, 2]])
    return Observation(PlanarPose.from_array(draws.mean(axis=0)), draws.std(axis=0, ddof=1), d, timestamp, dz)


def to_base_frame(obs: Observation, ee_pose: RigidTransform) -> Observation:
    """Map a relative prediction into the base frame with T_RB = T_RE T_EB.

    Vertical poses compose in the plane, so this is done on (x, y, yaw) directly.
    """
    c, s = ee_pose.rotation[0, 0], ee_pose.rotation[1, 0]
    p = obs.predicted
    x = ee_pose.translation[0] + c * p.x - s * p.y
    y = ee_pose.translation[1] + s * p.x + c * p.y
    yaw = math.atan2(s, c) + p.yaw
    return Observation(PlanarPose(x, y, yaw), obs.sigma, obs.distance, obs.timestamp, obs.dz)


def collect_dataset(cfg: SceneConfig, w: WorldState, n_trajectories: int, region: Region,
                    rng: np.random.Generator) -> Dataset:
    """Self-supervised data collection around the bottleneck.

    ``approach``: start at a random pose at the approach height, move in a
    straight line towards a target sampled near the bottleneck, recording one
    sample per control step while above the bottleneck height.
    ``last_inch``: start and target both sampled near the bottleneck at its
    height; one sample per step until the target is reached.
    """
    h = w.h
    b = to_planar(w.bottleneck_true, h)
    pos_half, yaw_half = TARGET_BOX[region]
    samples: list[DatasetSample] = []

    def near_bottleneck() -> RigidTransform:
        dx, dy = rng.uniform(-pos_half, pos_half, size=2)
        dyaw = rng.uniform(-yaw_half, yaw_half)
        return lift_planar(PlanarPose(b.x + dx, b.y + dy, b.yaw + dyaw), h)

    max_steps = 100_000
    for traj in range(n_trajectories):
        if region == "approach":
            ee = sample_approach_start(cfg, rng, "train")
        else:
            ee = near_bottleneck()
        target = near_bottleneck()
        for _ in range(max_steps):
            if region == "approach":
                if ee.translation[2] <= h + HEIGHT_TOL:
                    break
            elif np.array_equal(ee.translation, target.translation):
                break
            truth, d, dz = _truth(w.with_ee(ee))
            samples.append(DatasetSample(truth, d, dz, traj))
            ee = linear_step(ee, target, cfg.controller_speed, cfg.dt)
    return Dataset(tuple(samples), region)


def _validation_split(d: Dataset, rng: np.random.Generator) -> list[DatasetSample]:
    n_val = int(len(d) * VALIDATION_FRACTION)
    idx = rng.permutation(len(d))[:n_val]
    return [d.samples[i] for i in sorted(idx)]


def _validation_errors(val: list[DatasetSample], model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    errs = np.empty((len(val), 3))
    for i, s in enumerate(val):
        pred, _ = corrupt(s.true_relative, s.distance, model, rng)
        errs[i] = (pred.x - s.true_relative.x, pred.y - s.true_relative.y,
                   wrap_angle(pred.yaw - s.true_relative.yaw))
    return errs


def fit_prior_uncertainty(d: Dataset, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Constant per-dimension sigma: RMSE of the regressor on a 20% validation split."""
    val = _validation_split(d, rng)
    if not val:
        raise EmptyDataset(f"validation split of {len(d)} samples is empty")
    errs = _validation_errors(val, model, rng)
    return np.maximum(np.sqrt(np.mean(errs**2, axis=0)), SIGMA_FLOOR)


@dataclass(frozen=True, eq=False)
class UncertaintyPredictor:
    """Per-dimension affine map from camera distance to Gaussian sigma."""

    intercept: np.ndarray
    slope: np.ndarray
    floor: float = field(default=SIGMA_FLOOR)

    def sigma_at(self, distance: float) -> np.ndarray:
        return np.maximum(self.intercept + self.slope * distance, self.floor)

    def __call__(self, predicted: PlanarPose, dz: float) -> np.ndarray:
        """Sigma for a relative prediction; distance is implied by the prediction itself."""
        return self.sigma_at(math.sqrt(predicted.x**2 + predicted.y**2 + dz**2))

    def to_dict(self) -> dict:
        return {"intercept": self.intercept.tolist(), "slope": self.slope.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> UncertaintyPredictor:
        return cls(np.array(d["intercept"], dtype=float), np.array(d["slope"], dtype=float))


def fit_predicted_uncertainty(d: Dataset, model: NoiseModel, rng: np.random.Generator) -> UncertaintyPredictor:
    """Least-squares fit of |error| against distance, rescaled from mean-absolute to sigma."""
    val = _validation_split(d, rng)
    dist = np.array([s.distance for s in val])
    if len(val) < 2 or np.ptp(dist) <= 0:
        raise InsufficientData("need at least two distinct distances in the validation split")
    errs = np.abs(_validation_errors(val, model, rng))
    design = np.column_stack([np.ones_like(dist), dist])
    coef, *_ = np.linalg.lstsq(design, errs, rcond=None)
    return UncertaintyPredictor(MAE_TO_SIGMA * coef[0], MAE_TO_SIGMA * coef[1])

