"""Experiment configuration and its flat ``section.key = value`` file format.

Blank lines and ``#`` comments are ignored. Every key below is optional;
unknown keys are errors. Units are SI (meters, radians, seconds).

    scene.task_space_side       side of the square task space, m
    scene.approach_height       approach start height above the table, m
    scene.table_height          table surface height in the base frame, m
    scene.object_yaw_range      full width of the test-time object yaw range, rad
    scene.controller_speed      linear approach speed, m/s
    scene.dt                    control period, s
    scene.bottleneck_x          bottleneck offset in the object frame, m
    scene.bottleneck_y          bottleneck offset in the object frame, m
    scene.bottleneck_height     bottleneck height above the table, m
    scene.bottleneck_yaw        bottleneck yaw in the object frame, rad

    noise.pos_sigma_base        approach sensor position sigma at d=0, m
    noise.pos_sigma_slope       growth of position sigma with distance, m/m
    noise.yaw_sigma_base        approach sensor yaw sigma at d=0, rad
    noise.yaw_sigma_slope       growth of yaw sigma with distance, rad/m
    noise.ensemble_size         predictions per dropout-style ensemble
    last_inch.*                 same five keys for the last-inch sensor

    experiment.methods          comma list of estimator labels, e.g. Oracle,Batch(Prior)
    experiment.n_objects        number of synthetic objects
    experiment.n_poses_per_object
    experiment.n_train_trajectories      trajectories for the approach dataset
    experiment.n_last_inch_trajectories  trajectories for the last-inch dataset
    experiment.object_noise_spread       log-std of per-object noise scale factors
    experiment.best_image_score          position | trace | yaw
    experiment.master_seed
    experiment.workers          worker processes for trial execution

    task.methods                comma list of estimator labels for the task benchmark
    task.correction             on | off | both
    task.success_pos_tol        terminal position tolerance, m
    task.success_yaw_tol        terminal orientation tolerance, rad
    task.demo                   insert | twist_insert | scoop | hammer
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..estimation import EstimatorKind, all_kinds
from ..scene import SceneConfig
from ..sensor import NoiseModel

ORACLE = "Oracle"
DEMO_KINDS = ("insert", "twist_insert", "scoop", "hammer")


def _default_methods() -> tuple[str, ...]:
    return (ORACLE,) + tuple(k.label for k in all_kinds())


def _default_last_inch() -> NoiseModel:
    return NoiseModel(pos_sigma_base=0.001, pos_sigma_slope=0.02,
                      yaw_sigma_base=math.radians(1.0), yaw_sigma_slope=math.radians(20.0))


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    last_inch: NoiseModel = field(default_factory=_default_last_inch)
    methods: tuple[str, ...] = field(default_factory=_default_methods)
    n_objects: int = 7
    n_poses_per_object: int = 5
    n_train_trajectories: int = 50
    n_last_inch_trajectories: int = 50
    object_noise_spread: float = 0.2
    best_image_score: str = "position"
    master_seed: int = 0
    workers: int = 1
    task_methods: tuple[str, ...] = ("Filtering(Prior)", "VisualServoing")
    task_correction: str = "both"
    success_pos_tol: float = 0.010
    success_yaw_tol: float = math.radians(10.0)
    demo: str = "insert"

    def __post_init__(self):
        for name in ("n_objects", "n_poses_per_object", "n_train_trajectories",
                     "n_last_inch_trajectories", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"experiment.{name} must be >= 1")
        if self.success_pos_tol < 0 or self.success_yaw_tol < 0:
            raise ConfigError("success tolerances must be >= 0")
        if self.object_noise_spread < 0:
            raise ConfigError("experiment.object_noise_spread must be >= 0")
        if self.task_correction not in ("on", "off", "both"):
            raise ConfigError("task.correction must be on, off or both")
        if self.demo not in DEMO_KINDS:
            raise ConfigError(f"task.demo must be one of {DEMO_KINDS}")
        if self.best_image_score not in ("position", "trace", "yaw"):
            raise ConfigError("experiment.best_image_score must be position, trace or yaw")
        if not self.methods:
            raise ConfigError("experiment.methods is empty")
        for label in self.methods + self.task_methods:
            if label != ORACLE:
                self.kind(label)
        if (self.last_inch.pos_sigma_base > self.noise.pos_sigma_base
                or self.last_inch.yaw_sigma_base > self.noise.yaw_sigma_base):
            raise ConfigError("last-inch sensor must be at least as tight as the approach sensor at d=0")

    def kind(self, label: str) -> EstimatorKind:
        try:
            return EstimatorKind.parse(label, self.best_image_score)
        except ValueError as e:
            raise ConfigError(f"bad estimator label {label!r}: {e}") from None

    @property
    def corrections(self) -> tuple[bool, ...]:
        return {"on": (True,), "off": (False,), "both": (False, True)}[self.task_correction]

    @property
    def success_tolerance(self) -> tuple[float, float]:
        return self.success_pos_tol, self.success_yaw_tol


_SECTIONS = {"scene": SceneConfig, "noise": NoiseModel, "last_inch": NoiseModel}
_EXPERIMENT_KEYS = {
    "methods": "methods", "n_objects": "n_objects", "n_poses_per_object": "n_poses_per_object",
    "n_train_trajectories": "n_train_trajectories", "n_last_inch_trajectories": "n_last_inch_trajectories",
    "object_noise_spread": "object_noise_spread", "best_image_score": "best_image_score",
    "master_seed": "master_seed", "workers": "workers",
}
_TASK_KEYS = {
    "methods": "task_methods", "correction": "task_correction", "success_pos_tol": "success_pos_tol",
    "success_yaw_tol": "success_yaw_tol", "demo": "demo",
}


def _coerce(raw: str, like, key: str):
    try:
        if isinstance(like, tuple):
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(like).__name__}") from None


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    sections: dict[str, dict] = {name: {} for name in _SECTIONS}
    top: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        section, _, name = key.partition(".")
        if section in _SECTIONS:
            dc = getattr(cfg, section)
            names = {f.name for f in fields(dc)}
            if name not in names:
                raise ConfigError(f"line {lineno}: unknown key {key}")
            sections[section][name] = _coerce(raw, getattr(dc, name), key)
        elif section == "experiment" and name in _EXPERIMENT_KEYS:
            attr = _EXPERIMENT_KEYS[name]
            top[attr] = _coerce(raw, getattr(cfg, attr), key)
        elif section == "task" and name in _TASK_KEYS:
            attr = _TASK_KEYS[name]
            top[attr] = _coerce(raw, getattr(cfg, attr), key)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key}")
    try:
        for section, values in sections.items():
            if values:
                top[section] = replace(getattr(cfg, section), **values)
        return replace(cfg, **top)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config in the same key-value format (round-trips through parse_config)."""
    lines = []
    for section in _SECTIONS:
        dc = getattr(cfg, section)
        for f in fields(dc):
            lines.append(f"{section}.{f.name} = {getattr(dc, f.name)!r}")
    for prefix, keys in (("experiment", _EXPERIMENT_KEYS), ("task", _TASK_KEYS)):
        for name, attr in keys.items():
            v = getattr(cfg, attr)
            v = ",".join(v) if isinstance(v, tuple) else v
            lines.append(f"{prefix}.{name} = {v}")
    return "\n".join(lines) + "\n"
