"""Closed-loop tracking episodes: the outer control loop, run logging, and
the tracking benchmark's experiment configuration.

Model settings:
  1  transfer: models learned previously on cylinder_x, no online update
  2  transfer with online update after every push
  3  learned on the target object itself, no online update
  4  learned on the target object with online update
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import executor
from .models import Control, ModelConfig, TransitionModels, learn_models, load_models, update_models
from .mpc import MpcConfig, ReferenceTrajectory, plan_detailed
from .plant import DisturbanceParams, PlantParams, PushingPlant, default_params
from .se2 import DistanceWeights, Pose2, distance
from .shapes import PolygonShape, builtin_shapes, load_shape_file
from .trajectories import compute_mae, gen_circle, gen_letter, gen_square

log = logging.getLogger(__name__)

TRANSFER_SETTINGS = (1, 2)
ONLINE_UPDATE_SETTINGS = (2, 4)


class ConfigurationError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = "circle"             # circle | square | letter
    radius: float = 0.15
    side: float = 0.2
    letter: str = "R"
    scale: float = 0.3
    n_waypoints: Optional[int] = None
    center: tuple[float, float] = (0.0, 0.0)

    def build(self) -> ReferenceTrajectory:
        if self.kind == "circle":
            return gen_circle(self.radius, self.n_waypoints or 60, self.center)
        if self.kind == "square":
            return gen_square(self.side, self.n_waypoints or 52, self.center)
        if self.kind == "letter":
            return gen_letter(self.letter, self.scale, self.n_waypoints, self.center)
        raise ConfigurationError(f"unknown trajectory kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    shape: str = "square_block"
    setting: int = 2
    n_explore: int = 10
    max_pushes: int = 500
    delta: float = 0.01               # termination threshold (meter-equivalent)
    sigma: float = executor.DEFAULT_SIGMA
    epsilon: float = 0.1
    weights: DistanceWeights = field(default_factory=DistanceWeights)
    # The termination check against the final waypoint is positional by
    # default; heading error has no natural place in a reach test.
    termination_weights: DistanceWeights = field(
        default_factory=lambda: DistanceWeights(1.0, 0.0))
    mpc: MpcConfig = field(default_factory=MpcConfig)
    plant: Optional[PlantParams] = None    # None -> default_params(shape)
    disturbance: Optional[DisturbanceParams] = None
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    model_file: Optional[str] = None       # required for settings 1 and 2
    shape_file: Optional[str] = None       # overrides the builtin shape set
    start_pose: Optional[tuple[float, float, float]] = None  # default: first waypoint
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if self.setting not in (1, 2, 3, 4):
            raise ConfigurationError(f"setting must be 1-4, got {self.setting}")
        if self.n_explore < 1 or self.max_pushes < 1:
            raise ConfigurationError("counts must be >= 1")
        if not self.delta > 0.0:
            raise ConfigurationError("delta must be > 0")
        if len(self.seeds) < 1:
            raise ConfigurationError("need at least one seed")

    def resolve_shape(self) -> PolygonShape:
        if self.shape_file is not None:
            return load_shape_file(self.shape_file)
        shapes = builtin_shapes()
        if self.shape not in shapes:
            raise ConfigurationError(
                f"unknown shape {self.shape!r}; builtin: {sorted(shapes)}")
        return shapes[self.shape]


@dataclass(frozen=True)
class StepRecord:
    step: int
    pose: Pose2
    control: Optional[Control]
    smoothed: bool
    miss: bool
    dataset_size: int


@dataclass(frozen=True)
class RunLog:
    steps: tuple[StepRecord, ...]   # step 0 is the initial pose, no control
    mae_mm: float
    pushes: int
    termination: str                # "reached" | "budget"
    seed: int
    shape: str
    setting: int

    def poses(self) -> list[Pose2]:
        return [s.pose for s in self.steps]


def _rng_streams(seed: int) -> tuple[np.random.Generator, ...]:
    learn_ss, mpc_ss, plant_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(learn_ss), np.random.default_rng(mpc_ss),
            np.random.default_rng(plant_ss))


def _prepare_models(config: ExperimentConfig, plant: PushingPlant,
                    rng: np.random.Generator) -> TransitionModels:
    if config.setting in TRANSFER_SETTINGS:
        if config.model_file is None:
            raise ConfigurationError(
                f"setting #{config.setting} transfers a previously learned model; "
                "set model_file to the output of the 'learn' command")
        path = Path(config.model_file)
        if not path.exists():
            raise ConfigurationError(f"model file not found: {path}")
        return load_models(path)
    model_config = ModelConfig(epsilon=config.epsilon,
                               motion_scale=plant.params.push_distance_d)
    start = plant.object_pose
    models = learn_models(plant, config.n_explore, rng, model_config)
    plant.reset(start)  # exploration moves the object; the task starts at x0
    return models


def run_episode(config: ExperimentConfig, seed: int, validate: bool = False) -> RunLog:
    """Run one closed-loop tracking episode: plan -> smoothed execute ->
    (optionally) update models, until the final waypoint is reached or the
    push budget is exhausted."""
    shape = config.resolve_shape()
    params = config.plant if config.plant is not None else default_params(shape)
    if config.disturbance is not None:
        params = replace(params, disturbance=config.disturbance)
    traj = config.trajectory.build()

    learn_rng, mpc_rng, plant_rng = _rng_streams(seed)
    x0 = (Pose2(*config.start_pose) if config.start_pose is not None
          else traj.waypoints[0])
    plant = PushingPlant(shape, params, x0, rng=plant_rng)

    models = _prepare_models(config, plant, learn_rng)
    epsilon_matches = abs(models.config.epsilon - config.epsilon) < 1e-12
    if not epsilon_matches and config.setting in ONLINE_UPDATE_SETTINGS:
        log.info("loaded model epsilon %.3g differs from config epsilon %.3g; "
                 "keeping the loaded value", models.config.epsilon, config.epsilon)

    goal = traj.waypoints[-1]
    steps = [StepRecord(0, plant.object_pose, None, False, False, len(models.dataset))]
    u_prev: Optional[Control] = None
    pushes = 0
    termination = "budget"

    while pushes < config.max_pushes:
        x_t = plant.object_pose
        if distance(x_t, goal, config.termination_weights) <= config.delta:
            termination = "reached"
            break
        u, _info = plan_detailed(models, x_t, traj, config.mpc, mpc_rng)
        x_next, exec_result = executor.smoothened_execute(plant, u, u_prev, config.sigma)
        if config.setting in ONLINE_UPDATE_SETTINGS:
            models = update_models(models, u, x_t, x_next)
            if validate:
                models.dataset.check_separation()
        pushes += 1
        steps.append(StepRecord(pushes, x_next, u, exec_result.smoothed,
                                exec_result.missed, len(models.dataset)))
        u_prev = u

    if termination == "budget" and distance(
            plant.object_pose, goal, config.termination_weights) <= config.delta:
        termination = "reached"

    mae = compute_mae([s.pose for s in steps], traj)
    return RunLog(tuple(steps), mae, pushes, termination, seed,
                  config.shape, config.setting)


CSV_HEADER = "step,x_m,y_m,theta_rad,alpha,beta,smoothed,miss,dataset_size"


def runlog_to_csv(runlog: RunLog) -> str:
    """Fixed-schema CSV; float fields use shortest-repr formatting so equal
    runs serialize to identical bytes."""
    lines = [CSV_HEADER]
    for s in runlog.steps:
        alpha = repr(s.control.alpha) if s.control is not None else ""
        beta = repr(s.control.beta) if s.control is not None else ""
        lines.append(",".join([
            str(s.step), repr(s.pose.x), repr(s.pose.y), repr(s.pose.theta),
            alpha, beta, str(int(s.smoothed)), str(int(s.miss)),
            str(s.dataset_size),
        ]))
    return "\n".join(lines) + "\n"


def runlog_summary(runlog: RunLog) -> dict:
    return {
        "mae_mm": runlog.mae_mm,
        "pushes": runlog.pushes,
        "termination": runlog.termination,
        "seed": runlog.seed,
        "shape": runlog.shape,
        "setting": runlog.setting,
    }


def save_runlog(runlog: RunLog, path) -> None:
    doc = {
        "summary": runlog_summary(runlog),
        "steps": [
            {"step": s.step,
             "pose": [s.pose.x, s.pose.y, s.pose.theta],
             "control": ([s.control.alpha, s.control.beta]
                         if s.control is not None else None),
             "smoothed": s.smoothed, "miss": s.miss,
             "dataset_size": s.dataset_size}
            for s in runlog.steps
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_runlog(path) -> RunLog:
    doc = json.loads(Path(path).read_text())
    steps = tuple(
        StepRecord(s["step"], Pose2(*s["pose"]),
                   Control(*s["control"]) if s["control"] is not None else None,
                   s["smoothed"], s["miss"], s["dataset_size"])
        for s in doc["steps"]
    )
    summ = doc["summary"]
    return RunLog(steps, summ["mae_mm"], summ["pushes"], summ["termination"],
                  summ["seed"], summ["shape"], summ["setting"])
