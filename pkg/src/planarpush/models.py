"""Non-parametric push transition models.

A forward model maps a control to the object's body-frame motion, and an
inverse model maps a desired motion back to a control; both are small GP
regressors over the same experience dataset, with the domain and codomain
swapped. The dataset stays epsilon-separated in control space: executing
a control close to a stored one replaces the stale sample.

The control angle alpha is circular, so both model sides embed it as
(cos alpha, sin alpha); a raw angle norm would alias 0 and 2*pi.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .gp import GpRegressor, gp_fit
from .se2 import TWO_PI, Pose2, relative_motion, wrap_angle

log = logging.getLogger(__name__)

BETA_MAX = 0.2
DEGENERATE_HEADING_NORM = 1e-6


def wrap_alpha(alpha: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    a = alpha % TWO_PI
    return 0.0 if a == TWO_PI else a


@dataclass(frozen=True)
class Control:
    """A push: start angle alpha in [0, 2*pi) on the virtual circle, approach
    offset beta in [-BETA_MAX, BETA_MAX] (both radians, object body frame)."""

    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_alpha(self.alpha))
        if abs(self.beta) > BETA_MAX + 1e-12:
            raise ValueError(f"|beta| must be <= {BETA_MAX}, got {self.beta}")


@dataclass(frozen=True)
class MotionSample:
    control: Control
    motion: Pose2  # observed body-frame rigid motion


def featurize_control(u: Control) -> np.ndarray:
    """(cos alpha, sin alpha, beta) feature vector."""
    return np.array([math.cos(u.alpha), math.sin(u.alpha), u.beta])


def control_distance(u1: Control, u2: Control) -> float:
    """sqrt(wrapped(alpha1 - alpha2)^2 + (beta1 - beta2)^2)."""
    return math.hypot(wrap_angle(u1.alpha - u2.alpha), u1.beta - u2.beta)


@dataclass(frozen=True)
class Dataset:
    """Ordered experience samples whose controls are pairwise separated by
    more than `epsilon` in control distance."""

    samples: tuple[MotionSample, ...] = ()
    epsilon: float = 0.1

    def __len__(self) -> int:
        return len(self.samples)

    def with_update(self, control: Control, motion: Pose2) -> "Dataset":
        """Drop samples within epsilon of `control`, then append the new pair."""
        kept = tuple(s for s in self.samples
                     if control_distance(control, s.control) >= self.epsilon)
        return Dataset(kept + (MotionSample(control, motion),), self.epsilon)

    def check_separation(self) -> None:
        for i, a in enumerate(self.samples):
            for b in self.samples[i + 1:]:
                d = control_distance(a.control, b.control)
                if d < self.epsilon:
                    raise AssertionError(
                        f"dataset separation violated: {d} < {self.epsilon}")

    def control_features(self) -> np.ndarray:
        return np.array([featurize_control(s.control) for s in self.samples])

    def motions(self) -> np.ndarray:
        return np.array([s.motion.as_array() for s in self.samples])

    def control_alphas(self) -> np.ndarray:
        return np.array([s.control.alpha for s in self.samples])


@dataclass(frozen=True)
class ModelConfig:
    """Fixed GP hyperparameters and dataset settings.

    The inverse model's motion inputs are scaled by (1/motion_scale,
    1/motion_scale, 1/BETA_MAX) so lengthscales are comparable across
    dimensions; motion_scale should match the plant's push distance.
    """

    epsilon: float = 0.1
    motion_scale: float = 0.02
    forward_lengthscales: tuple[float, float, float] = (0.5, 0.5, 0.1)
    inverse_lengthscales: tuple[float, float, float] = (0.5, 0.5, 0.5)
    forward_noise_std: tuple[float, float, float] = (0.001, 0.001, 0.01)
    inverse_noise_std: tuple[float, float, float] = (0.02, 0.02, 0.02)
    signal_floor: float = 1e-4

    def inverse_input_scale(self) -> np.ndarray:
        s = 1.0 / self.motion_scale
        return np.array([s, s, 1.0 / BETA_MAX])


@dataclass(frozen=True)
class TransitionModels:
    """Paired forward/inverse GP regressors trained on one dataset.

    Immutable after fit: predictions are pure and thread-safe, and online
    updates produce a new value via update_models().
    """

    forward: GpRegressor
    inverse: GpRegressor
    dataset: Dataset
    config: ModelConfig

    @classmethod
    def fit(cls, dataset: Dataset, config: ModelConfig = ModelConfig()) -> "TransitionModels":
        if len(dataset) < 1:
            raise ValueError("cannot fit transition models on an empty dataset")
        features = dataset.control_features()
        motions = dataset.motions()
        forward = gp_fit(features, motions,
                         lengthscales=config.forward_lengthscales,
                         noise_std=config.forward_noise_std,
                         signal_floor=config.signal_floor)
        scaled = motions * config.inverse_input_scale()
        inverse = gp_fit(scaled, features,
                         lengthscales=config.inverse_lengthscales,
                         noise_std=config.inverse_noise_std,
                         signal_floor=config.signal_floor)
        return cls(forward, inverse, dataset, config)

    def predict_forward(self, u: Control) -> Pose2:
        mean = self.forward.predict_mean(featurize_control(u))
        return Pose2(mean[0], mean[1], wrap_angle(mean[2]))

    def predict_inverse(self, g: Pose2) -> Control:
        u, fallback = self.predict_inverse_ex(g)
        if fallback:
            log.warning("inverse prediction degenerate at motion %s; "
                        "using nearest training sample's alpha", g)
        return u

    def predict_inverse_ex(self, g: Pose2) -> tuple[Control, bool]:
        """Inverse prediction plus a flag marking the degenerate-heading
        fallback (predicted (cos, sin) with norm < 1e-6)."""
        q = g.as_array() * self.config.inverse_input_scale()
        c, s, b = self.inverse.predict_mean(q)
        fallback = math.hypot(c, s) < DEGENERATE_HEADING_NORM
        if fallback:
            d2 = np.sum((self.inverse.inputs - q) ** 2, axis=1)
            alpha = float(self.dataset.control_alphas()[int(np.argmin(d2))])
        else:
            alpha = wrap_alpha(math.atan2(s, c))
        beta = min(max(float(b), -BETA_MAX), BETA_MAX)
        return Control(alpha, beta), fallback

    @cached_property
    def kernel_pack(self) -> dict:
        """Contiguous arrays consumed by the compiled rollout kernel."""
        return {
            "fwd_x": np.ascontiguousarray(self.forward.inputs),
            "fwd_w": np.ascontiguousarray(self.forward.mean_weights),
            "fwd_mean": np.ascontiguousarray(self.forward.ymean),
            "fwd_ls": np.ascontiguousarray(self.forward.lengthscales),
            "inv_x": np.ascontiguousarray(self.inverse.inputs),
            "inv_w": np.ascontiguousarray(self.inverse.mean_weights),
            "inv_mean": np.ascontiguousarray(self.inverse.ymean),
            "inv_ls": np.ascontiguousarray(self.inverse.lengthscales),
            "inv_scale": np.ascontiguousarray(self.config.inverse_input_scale()),
            "train_alpha": np.ascontiguousarray(self.dataset.control_alphas()),
        }


def predict_forward(models: TransitionModels, u: Control) -> Pose2:
    return models.predict_forward(u)


def predict_inverse(models: TransitionModels, g: Pose2) -> Control:
    return models.predict_inverse(g)


def sample_control(rng: np.random.Generator) -> Control:
    """Uniform exploratory control: alpha ~ U[0, 2*pi), beta ~ U[-0.2, 0.2]."""
    alpha = rng.uniform(0.0, TWO_PI)
    beta = rng.uniform(-BETA_MAX, BETA_MAX)
    return Control(alpha, beta)


def learn_models(plant, n_samples: int, rng: np.random.Generator,
                 config: ModelConfig = ModelConfig(),
                 execute_fn=None) -> TransitionModels:
    """Collect n_samples exploratory pushes on the plant and regress both
    transition models from the observed (control, motion) pairs.

    Missed pushes are recorded with their (near-identity) motion; the data
    collection is deliberately blind to push success.
    """
    if n_samples < 1:
        raise ValueError("need at least one exploratory push")
    if execute_fn is None:
        from .executor import execute as execute_fn
    dataset = Dataset(epsilon=config.epsilon)
    for _ in range(n_samples):
        u = sample_control(rng)
        before = plant.object_pose
        after, _result = execute_fn(plant, u)
        dataset = dataset.with_update(u, relative_motion(before, after))
    return TransitionModels.fit(dataset, config)


def update_models(models: TransitionModels, u: Control,
                  x_before: Pose2, x_after: Pose2) -> TransitionModels:
    """Fold one executed push into the dataset (replacing epsilon-close
    samples) and refit both regressors."""
    dataset = models.dataset.with_update(u, relative_motion(x_before, x_after))
    return TransitionModels.fit(dataset, models.config)


SCHEMA_VERSION = 1


def save_models(models: TransitionModels, path, metadata: Optional[dict] = None) -> None:
    """Serialize the dataset and hyperparameters as JSON; loading refits the
    regressors, which is deterministic."""
    cfg = models.config
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "epsilon": cfg.epsilon,
            "motion_scale": cfg.motion_scale,
            "forward_lengthscales": list(cfg.forward_lengthscales),
            "inverse_lengthscales": list(cfg.inverse_lengthscales),
            "forward_noise_std": list(cfg.forward_noise_std),
            "inverse_noise_std": list(cfg.inverse_noise_std),
            "signal_floor": cfg.signal_floor,
        },
        "samples": [
            {"alpha": s.control.alpha, "beta": s.control.beta,
             "motion": [s.motion.x, s.motion.y, s.motion.theta]}
            for s in models.dataset.samples
        ],
        "metadata": metadata or {},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_models(path) -> TransitionModels:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model file version in {path}")
    c = doc["config"]
    config = ModelConfig(
        epsilon=c["epsilon"],
        motion_scale=c["motion_scale"],
        forward_lengthscales=tuple(c["forward_lengthscales"]),
        inverse_lengthscales=tuple(c["inverse_lengthscales"]),
        forward_noise_std=tuple(c["forward_noise_std"]),
        inverse_noise_std=tuple(c["inverse_noise_std"]),
        signal_floor=c["signal_floor"],
    )
    samples = tuple(
        MotionSample(Control(s["alpha"], s["beta"]), Pose2(*s["motion"]))
        for s in doc["samples"]
    )
    return TransitionModels.fit(Dataset(samples, config.epsilon), config)
