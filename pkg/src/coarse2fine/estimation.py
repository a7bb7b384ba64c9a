"""Sequential estimators for a stationary bottleneck pose.

All estimators treat the three planar dimensions (x, y, yaw) as independent
scalar Gaussians. Yaw is fused as a residual relative to the first
observation's yaw and wrapped back on output, which is safe while the spread
of predictions stays well inside +/- pi.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyStream
from .geometry import PlanarPose, wrap_angle
from .sensor import Observation


class Method(str, enum.Enum):
    FIRST_IMAGE = "FirstImage"
    BEST_IMAGE = "BestImage"
    VISUAL_SERVOING = "VisualServoing"
    BATCH = "Batch"
    FILTERING = "Filtering"


class Uncertainty(str, enum.Enum):
    DROPOUT = "Dropout"
    PREDICTED = "Predicted"
    PRIOR = "Prior"


_SCORES = ("position", "trace", "yaw")


@dataclass(frozen=True)
class EstimatorKind:
    method: Method
    uncertainty: Uncertainty | None = None
    # how BestImage ranks a 3-vector sigma
    score: str = "position"

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.uncertainty is not None:
            object.__setattr__(self, "uncertainty", Uncertainty(self.uncertainty))
        m, u = self.method, self.uncertainty
        if m in (Method.FIRST_IMAGE, Method.VISUAL_SERVOING):
            if u is not None:
                raise ValueError(f"{m.value} takes no uncertainty source")
        elif u is None:
            raise ValueError(f"{m.value} needs an uncertainty source")
        elif m is Method.BEST_IMAGE and u is Uncertainty.PRIOR:
            raise ValueError("BestImage with a constant prior sigma cannot rank images")
        if self.score not in _SCORES:
            raise ValueError(f"score must be one of {_SCORES}")

    @property
    def label(self) -> str:
        if self.uncertainty is None:
            return self.method.value
        return f"{self.method.value}({self.uncertainty.value})"

    @classmethod
    def parse(cls, label: str, score: str = "position") -> EstimatorKind:
        label = label.strip()
        if "(" in label:
            name, _, rest = label.partition("(")
            return cls(Method(name.strip()), Uncertainty(rest.rstrip(")").strip()), score)
        return cls(Method(label), None, score)

    def __str__(self) -> str:
        return self.label


def all_kinds(score: str = "position") -> list[EstimatorKind]:
    """The ten sensing-based estimators, in reporting order."""
    return [
        EstimatorKind(Method.FIRST_IMAGE, None, score),
        EstimatorKind(Method.BEST_IMAGE, Uncertainty.DROPOUT, score),
        EstimatorKind(Method.BEST_IMAGE, Uncertainty.PREDICTED, score),
        EstimatorKind(Method.VISUAL_SERVOING, None, score),
        EstimatorKind(Method.BATCH, Uncertainty.PRIOR, score),
        EstimatorKind(Method.BATCH, Uncertainty.DROPOUT, score),
        EstimatorKind(Method.BATCH, Uncertainty.PREDICTED, score),
        EstimatorKind(Method.FILTERING, Uncertainty.PRIOR, score),
        EstimatorKind(Method.FILTERING, Uncertainty.DROPOUT, score),
        EstimatorKind(Method.FILTERING, Uncertainty.PREDICTED, score),
    ]


@dataclass(frozen=True, eq=False)
class Estimate:
    """Estimator output plus the state needed for the next update.

    ``weighted_sum``/``weight_sum`` are the Batch running sums of x/sigma^2
    and 1/sigma^2 in yaw-residual coordinates; ``best_score`` is the
    BestImage ranking of the currently held observation.
    """

    value: PlanarPose
    sigma: np.ndarray
    n_observations: int
    yaw_ref: float = 0.0
    weighted_sum: np.ndarray | None = None
    weight_sum: np.ndarray | None = None
    best_score: float = float("inf")

    def to_dict(self) -> dict:
        return {
            "n": self.n_observations,
            "x": self.value.x, "y": self.value.y, "yaw": self.value.yaw,
            "sigma": [float(s) for s in self.sigma],
        }


def score_sigma(sigma: np.ndarray, score: str = "position") -> float:
    if score == "position":
        return float(0.5 * (sigma[0] + sigma[1]))
    if score == "trace":
        return float(sigma @ sigma)
    return float(sigma[2])


def _residual(p: PlanarPose, yaw_ref: float) -> np.ndarray:
    return np.array([p.x, p.y, wrap_angle(p.yaw - yaw_ref)])


def _from_residual(r: np.ndarray, yaw_ref: float) -> PlanarPose:
    return PlanarPose(r[0], r[1], yaw_ref + r[2])


def update(state: Estimate | None, obs: Observation, kind: EstimatorKind,
           prior: np.ndarray | None = None) -> Estimate:
    """Fold one observation into the estimate.

    ``state`` is ``None`` before the first observation. ``prior`` is the
    constant prior sigma; Filtering uses it as the initial estimate sigma.
    """
    m = kind.method
    n = 1 if state is None else state.n_observations + 1
    sigma_hat = obs.sigma

    if state is None:
        yaw_ref = obs.predicted.yaw
        if m is Method.BATCH:
            w = 1.0 / sigma_hat**2
            z = _residual(obs.predicted, yaw_ref)
            return Estimate(obs.predicted, sigma_hat, 1, yaw_ref, w * z, w)
        if m is Method.FILTERING:
            if prior is None:
                raise ValueError("Filtering needs a prior sigma for initialisation")
            return Estimate(obs.predicted, np.asarray(prior, dtype=float), 1, yaw_ref)
        return Estimate(obs.predicted, sigma_hat, 1, yaw_ref,
                        best_score=score_sigma(sigma_hat, kind.score))

    yaw_ref = state.yaw_ref
    if m is Method.FIRST_IMAGE:
        return Estimate(state.value, state.sigma, n, yaw_ref)
    if m is Method.VISUAL_SERVOING:
        return Estimate(obs.predicted, sigma_hat, n, yaw_ref)
    if m is Method.BEST_IMAGE:
        s = score_sigma(sigma_hat, kind.score)
        if s < state.best_score:
            return Estimate(obs.predicted, sigma_hat, n, yaw_ref, best_score=s)
        return Estimate(state.value, state.sigma, n, yaw_ref, best_score=state.best_score)

    z = _residual(obs.predicted, yaw_ref)
    w_hat = 1.0 / sigma_hat**2
    if m is Method.BATCH:
        ws = state.weighted_sum + w_hat * z
        W = state.weight_sum + w_hat
        return Estimate(_from_residual(ws / W, yaw_ref), np.sqrt(1.0 / W), n, yaw_ref, ws, W)

    # Filtering: recursive inverse-variance fusion of previous estimate and new prediction
    w_bar = 1.0 / state.sigma**2
    x_bar = _residual(state.value, yaw_ref)
    fused = (x_bar * w_bar + z * w_hat) / (w_bar + w_hat)
    var = 1.0 / (w_bar + w_hat)
    return Estimate(_from_residual(fused, yaw_ref), np.sqrt(var), n, yaw_ref)


def fused_variance(sigmas: Iterable[Sequence[float]]) -> np.ndarray:
    """Per-dimension variance of the inverse-variance-weighted combination."""
    s = np.asarray(list(sigmas), dtype=float)
    return 1.0 / np.sum(1.0 / s**2, axis=0)


def run_estimator(obs_stream: Sequence[Observation], kind: EstimatorKind,
                  prior: np.ndarray | None = None) -> list[Estimate]:
    if len(obs_stream) == 0:
        raise EmptyStream("observation stream is empty")
    out: list[Estimate] = []
    state = None
    for obs in obs_stream:
        state = update(state, obs, kind, prior)
        out.append(state)
    return out
