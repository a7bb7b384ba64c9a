"""Seeded Monte-Carlo experiments: target reaching and the task benchmark.

Every random stream is derived from ``master_seed`` plus a fixed tag and the
trial coordinates, so a trial's outcome never depends on execution order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..demo import Demonstration, record_demo, replay, scripted_demo
from ..errors import ConfigError, MissingDataset
from ..estimation import Estimate, EstimatorKind, Uncertainty, update
from ..geometry import (
    PlanarPose,
    RigidTransform,
    compose,
    inverse,
    lift_planar,
    rotation_angle,
    wrap_angle,
)
from ..scene import SceneConfig, WorldState, linear_step, place_object, sample_approach_start
from ..sensor import (
    NoiseModel,
    UncertaintyPredictor,
    collect_dataset,
    fit_predicted_uncertainty,
    fit_prior_uncertainty,
    observe,
    observe_ensemble,
    to_base_frame,
)
from .config import ORACLE, ExperimentConfig
from .report import ReportTable, TrialRecord, aggregate

# stream tags for seed derivation
_TAG_OBJECT = 1
_TAG_DATASET = 2
_TAG_PLACEMENT = 3
_TAG_SENSING = 4
_TAG_LAST_INCH = 5

HEIGHT_EPS = 1e-9
MAX_APPROACH_STEPS = 100_000


def seed_sequence(cfg: ExperimentConfig, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.master_seed, *keys])


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class ObjectModels:
    """Per-object sensor noise plus the uncertainty models fitted on its datasets."""

    object_id: int
    noise: NoiseModel
    last_inch: NoiseModel
    prior_sigma: np.ndarray
    predictor: UncertaintyPredictor
    last_inch_prior: np.ndarray | None = None
    datasets: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        def nm(m: NoiseModel) -> dict:
            return {"pos_sigma_base": m.pos_sigma_base, "pos_sigma_slope": m.pos_sigma_slope,
                    "yaw_sigma_base": m.yaw_sigma_base, "yaw_sigma_slope": m.yaw_sigma_slope,
                    "ensemble_size": m.ensemble_size}

        return {
            "object_id": self.object_id,
            "noise": nm(self.noise),
            "last_inch": nm(self.last_inch),
            "prior_sigma": [float(v) for v in self.prior_sigma],
            "predictor": self.predictor.to_dict(),
            "last_inch_prior": None if self.last_inch_prior is None else [float(v) for v in self.last_inch_prior],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ObjectModels:
        lip = d.get("last_inch_prior")
        return cls(int(d["object_id"]), NoiseModel(**d["noise"]), NoiseModel(**d["last_inch"]),
                   np.array(d["prior_sigma"]), UncertaintyPredictor.from_dict(d["predictor"]),
                   None if lip is None else np.array(lip))


def save_models(models: dict[int, ObjectModels], path) -> None:
    Path(path).write_text(json.dumps([models[k].to_dict() for k in sorted(models)], indent=1) + "\n")


def load_models(path) -> dict[int, ObjectModels]:
    p = Path(path)
    if not p.exists():
        raise MissingDataset(f"no fitted models at {p}; run `collect` first")
    return {m["object_id"]: ObjectModels.from_dict(m) for m in json.loads(p.read_text())}


def object_noise(cfg: ExperimentConfig, object_id: int) -> tuple[NoiseModel, NoiseModel]:
    """Noise models of one synthetic object: the configured means scaled by log-normal factors."""
    rng = np.random.default_rng(seed_sequence(cfg, _TAG_OBJECT, object_id))
    fp, fy = np.exp(cfg.object_noise_spread * rng.standard_normal(2))
    return cfg.noise.scaled(fp, fy), cfg.last_inch.scaled(fp, fy)


def train_object(cfg: ExperimentConfig, object_id: int, scene: SceneConfig | None = None,
                 last_inch: bool = True) -> ObjectModels:
    """Collect the approach (and last-inch) datasets for one object and fit its uncertainty models."""
    scene = scene or cfg.scene
    noise, li_noise = object_noise(cfg, object_id)
    rng = np.random.default_rng(seed_sequence(cfg, _TAG_DATASET, object_id))
    world = place_object(scene, 0, "train")
    d = collect_dataset(scene, world, cfg.n_train_trajectories, "approach", rng)
    prior = fit_prior_uncertainty(d, noise, rng)
    predictor = fit_predicted_uncertainty(d, noise, rng)
    datasets = {"approach": d}
    li_prior = None
    if last_inch:
        e = collect_dataset(scene, world, cfg.n_last_inch_trajectories, "last_inch", rng)
        li_prior = fit_prior_uncertainty(e, li_noise, rng)
        datasets["last_inch"] = e
    return ObjectModels(object_id, noise, li_noise, prior, predictor, li_prior, datasets)


def train_models(cfg: ExperimentConfig, scene: SceneConfig | None = None,
                 last_inch: bool = True) -> dict[int, ObjectModels]:
    return {i: train_object(cfg, i, scene, last_inch) for i in range(cfg.n_objects)}


@dataclass
class ApproachResult:
    estimate: PlanarPose
    ee_pose: RigidTransform
    n_steps: int
    trace: list[dict] | None = None


def _sensor(kind: EstimatorKind, models: ObjectModels) -> Callable:
    noise = models.noise
    if kind.uncertainty is Uncertainty.DROPOUT:
        return lambda w, rng, t: observe_ensemble(w, noise, "approach", rng, t)
    if kind.uncertainty is Uncertainty.PREDICTED:
        def sense(w, rng, t):
            obs = observe(w, noise, "approach", rng, t)
            return obs.with_sigma(models.predictor(obs.predicted, obs.dz))
        return sense
    if kind.uncertainty is Uncertainty.PRIOR:
        prior = models.prior_sigma
        return lambda w, rng, t: observe(w, noise, "approach", rng, t).with_sigma(prior)
    return lambda w, rng, t: observe(w, noise, "approach", rng, t)


def run_approach(scene: SceneConfig, world: WorldState, method: str | EstimatorKind,
                 models: ObjectModels | None, rng: np.random.Generator,
                 trace: bool = False) -> ApproachResult:
    """Sense, update the estimate and step towards it while above the bottleneck height."""
    h = world.h
    ee = world.ee_pose
    if method == ORACLE:
        truth = _true_planar(world)
        sense = None
    else:
        if models is None:
            raise MissingDataset("sensing-based methods need fitted object models")
        sense = _sensor(method, models)
    state: Estimate | None = None
    steps = []
    t = 0
    while ee.translation[2] > h + HEIGHT_EPS:
        if t >= MAX_APPROACH_STEPS:
            raise RuntimeError("approach did not reach the bottleneck height")
        if sense is None:
            estimate = truth
        else:
            obs = to_base_frame(sense(world.with_ee(ee), rng, t), ee)
            state = update(state, obs, method, models.prior_sigma)
            estimate = state.value
            if trace:
                steps.append(dict(state.to_dict(), t=t, distance=obs.distance))
        ee = linear_step(ee, lift_planar(estimate, h), scene.controller_speed, scene.dt)
        t += 1
    if t == 0:
        raise RuntimeError("end-effector started at or below the bottleneck height")
    return ApproachResult(estimate, ee, t, steps if trace else None)


def planar_error(estimate: PlanarPose, truth: PlanarPose) -> tuple[float, float]:
    """Horizontal position error (m) and absolute yaw error (rad)."""
    return math.hypot(estimate.x - truth.x, estimate.y - truth.y), abs(wrap_angle(estimate.yaw - truth.yaw))


def _true_planar(world: WorldState) -> PlanarPose:
    b = world.bottleneck_true
    return PlanarPose(b.translation[0], b.translation[1], math.atan2(b.rotation[1, 0], b.rotation[0, 0]))


def _kind(cfg: ExperimentConfig, method: str) -> str | EstimatorKind:
    return ORACLE if method == ORACLE else cfg.kind(method)


def reach_trial(cfg: ExperimentConfig, models: dict[int, ObjectModels], object_id: int, pose_id: int,
                method: str, trace: bool = False) -> TrialRecord:
    placement = seed_sequence(cfg, _TAG_PLACEMENT, object_id, pose_id)
    sensing = seed_sequence(cfg, _TAG_SENSING, object_id, pose_id)
    world = place_object(cfg.scene, placement, "test")
    world = world.with_ee(sample_approach_start(cfg.scene, placement, "test"))
    kind = _kind(cfg, method)
    res = run_approach(cfg.scene, world, kind, models.get(object_id), np.random.default_rng(sensing), trace)
    pos, yaw = planar_error(res.estimate, _true_planar(world))
    return TrialRecord(method, None, object_id, pose_id, _seed_int(sensing),
                       pos * 1e3, math.degrees(yaw), res.trace)


def _trial_grid(cfg: ExperimentConfig, methods, extra=(None,)):
    return [(o, p, m, e) for o in range(cfg.n_objects) for p in range(cfg.n_poses_per_object)
            for m in methods for e in extra]


def _run_parallel(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) < 2:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*jobs)))


def run_reaching_trials(cfg: ExperimentConfig, models: dict[int, ObjectModels] | None = None,
                        trace: bool = False) -> list[TrialRecord]:
    needs_sensing = any(m != ORACLE for m in cfg.methods)
    if models is None:
        models = train_models(cfg, last_inch=False) if needs_sensing else {}
    elif needs_sensing and any(i not in models for i in range(cfg.n_objects)):
        raise MissingDataset("models missing for some objects")
    jobs = [(cfg, models, o, p, m, trace) for o, p, m, _ in _trial_grid(cfg, cfg.methods)]
    records = _run_parallel(reach_trial, jobs, cfg.workers)
    order = {m: i for i, m in enumerate(cfg.methods)}
    return sorted(records, key=lambda r: (r.object_id, r.pose_id, order[r.method]))


def run_target_reaching(cfg: ExperimentConfig, models: dict[int, ObjectModels] | None = None) -> ReportTable:
    """Target-reaching comparison: one row per method, errors in mm and degrees."""
    return aggregate(run_reaching_trials(cfg, models), cfg.methods)


def demo_for_config(cfg: ExperimentConfig) -> Demonstration:
    """Scripted demonstration starting at the configured bottleneck above the training object."""
    s = cfg.scene
    initial = compose(lift_planar(PlanarPose(0.0, 0.0, 0.0), s.table_height), s.bottleneck_offset)
    return record_demo(initial, scripted_demo(cfg.demo, rate=1.0 / s.dt), 1.0 / s.dt, s.table_height)


def scene_for_demo(scene: SceneConfig, demo: Demonstration) -> SceneConfig:
    """Scene whose bottleneck is the demo's verticalized start, relative to the training object."""
    b = demo.bottleneck_planar()
    height = demo.height - scene.table_height
    if height >= scene.approach_height:
        raise ConfigError("demonstration starts above the approach height")
    return replace(scene, bottleneck_x=b.x, bottleneck_y=b.y, bottleneck_height=height, bottleneck_yaw=b.yaw)


def object_relative_error(a: RigidTransform, b: RigidTransform) -> tuple[float, float]:
    """Position (m) and rotation angle (rad) between two poses."""
    return (float(np.linalg.norm(a.translation - b.translation)),
            rotation_angle(a.rotation.T @ b.rotation))


def task_trial(cfg: ExperimentConfig, models: dict[int, ObjectModels], demo: Demonstration,
               object_id: int, pose_id: int, method: str, correction: bool,
               trace: bool = False) -> TrialRecord:
    scene = scene_for_demo(cfg.scene, demo)
    placement = seed_sequence(cfg, _TAG_PLACEMENT, object_id, pose_id)
    sensing = seed_sequence(cfg, _TAG_SENSING, object_id, pose_id)
    world = place_object(scene, placement, "test")
    world = world.with_ee(sample_approach_start(scene, placement, "test"))
    kind = _kind(cfg, method)
    m = models.get(object_id)
    res = run_approach(scene, world, kind, m, np.random.default_rng(sensing), trace)
    estimate, ee = res.estimate, res.ee_pose
    h = world.h
    if correction:
        if m is None:
            raise MissingDataset("last-inch correction needs fitted object models")
        rng = np.random.default_rng(seed_sequence(cfg, _TAG_LAST_INCH, object_id, pose_id))
        obs = observe(world.with_ee(ee), m.last_inch, "last_inch", rng)
        estimate = to_base_frame(obs, ee).predicted
        ee = lift_planar(estimate, h)
    start = compose(ee, demo.reorient)
    executed = replay(demo, start)

    train_obj = inverse(place_object(scene, 0, "train").object_frame)
    reference = compose(train_obj, replay(demo, demo.initial_pose)[-1])
    achieved = compose(inverse(world.object_frame), executed[-1])
    pos, ori = object_relative_error(achieved, reference)
    tol_pos, tol_yaw = cfg.success_tolerance
    success = pos <= tol_pos and ori <= tol_yaw
    label = method + ("+Correction" if correction else "")
    return TrialRecord(label, correction, object_id, pose_id, _seed_int(sensing),
                       pos * 1e3, math.degrees(ori), res.trace, success)


def run_task_benchmark(cfg: ExperimentConfig, demo: Demonstration,
                       models: dict[int, ObjectModels] | None, trace: bool = False) -> list[TrialRecord]:
    """Full pipeline: approach, optional last-inch correction, reorient, open-loop replay."""
    sensing = any(m != ORACLE for m in cfg.task_methods)
    if sensing or True in cfg.corrections:
        if models is None or any(i not in models for i in range(cfg.n_objects)):
            raise MissingDataset("task benchmark needs fitted models for every object")
        if True in cfg.corrections and any(models[i].last_inch_prior is None for i in range(cfg.n_objects)):
            raise MissingDataset("last-inch correction needs the last-inch dataset")
    models = models or {}
    jobs = [(cfg, models, demo, o, p, m, c, trace)
            for o, p, m, c in _trial_grid(cfg, cfg.task_methods, cfg.corrections)]
    records = _run_parallel(task_trial, jobs, cfg.workers)
    order = {m: i for i, m in enumerate(cfg.task_methods)}
    return sorted(records, key=lambda r: (r.object_id, r.pose_id,
                                          order[r.method.removesuffix("+Correction")], bool(r.correction)))


def success_rates(records: list[TrialRecord]) -> dict[str, float]:
    out: dict[str, list[bool]] = {}
    for r in records:
        out.setdefault(r.method, []).append(bool(r.success))
    return {k: float(np.mean(v)) for k, v in out.items()}
