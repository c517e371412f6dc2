"""Sampling model-predictive control over the learned transition models.

Each control step simulates Q randomly perturbed rollouts of horizon L:
at every rollout step the desired motion toward the successor of the
nearest reference waypoint is perturbed, passed through the inverse model
to get a candidate control, and propagated through the forward model. The
first control of the cheapest rollout (summed nearest-waypoint distance
over the predicted poses) is executed.

Q = 0 degenerates to greedily executing the inverse model's prediction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import backend
from .models import BETA_MAX, Control, TransitionModels
from .se2 import (DistanceWeights, Pose2, compose, distance, relative_motion,
                  sample_perturbation)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Ordered waypoint poses the object should visit."""

    waypoints: tuple[Pose2, ...]

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if len(self.waypoints) < 1:
            raise ValueError("trajectory needs at least one waypoint")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must be distinct")
        object.__setattr__(self, "_array", None)

    def __len__(self) -> int:
        return len(self.waypoints)

    def as_array(self) -> np.ndarray:
        arr = object.__getattribute__(self, "_array")
        if arr is None:
            arr = np.ascontiguousarray([w.as_array() for w in self.waypoints])
            object.__setattr__(self, "_array", arr)
        return arr


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 20                 # L
    rollouts: int = 50                # Q
    perturbation_trans: float = 0.005
    perturbation_rot: float = 0.05
    weights: DistanceWeights = field(default_factory=DistanceWeights)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.rollouts < 0:
            raise ValueError("rollouts must be >= 0")


def nearest_waypoint(x: Pose2, traj: ReferenceTrajectory, w: DistanceWeights) -> int:
    """Index of the waypoint closest to x; ties break toward the larger
    index to favor forward progress."""
    best, best_d = 0, float("inf")
    for j, y in enumerate(traj.waypoints):
        d = distance(x, y, w)
        if d <= best_d:
            best, best_d = j, d
    return best


def desired_motion(x: Pose2, traj: ReferenceTrajectory, j_star: int) -> Pose2:
    """Body-frame motion from x to the successor of waypoint j_star
    (clamped at the final waypoint)."""
    j_next = min(j_star + 1, len(traj) - 1)
    return relative_motion(x, traj.waypoints[j_next])


def rollout_cost(poses: Sequence[Pose2], traj: ReferenceTrajectory,
                 w: DistanceWeights) -> float:
    """Sum of nearest-waypoint distances over the predicted poses,
    excluding the (given) initial pose."""
    total = 0.0
    for x in poses[1:]:
        total += min(distance(x, y, w) for y in traj.waypoints)
    return total


def _propagate(models, x0: Pose2, traj: ReferenceTrajectory, w: DistanceWeights,
               perturbations: Sequence[Pose2]) -> tuple[list[Pose2], list[Control]]:
    """Reference rollout loop; works with any object exposing
    predict_forward/predict_inverse."""
    poses = [x0]
    controls = []
    x = x0
    for g_xi in perturbations:
        j = nearest_waypoint(x, traj, w)
        g = compose(desired_motion(x, traj, j), g_xi)
        u = models.predict_inverse(g)
        x = compose(x, models.predict_forward(u))
        poses.append(x)
        controls.append(u)
    return poses, controls


def simulate_rollout(models, x0: Pose2, traj: ReferenceTrajectory,
                     config: MpcConfig, rng: np.random.Generator
                     ) -> tuple[list[Pose2], list[Control]]:
    """One perturbed rollout of length config.horizon; returns the predicted
    poses (L + 1 including x0) and the L candidate controls."""
    perts = [sample_perturbation(rng, config.perturbation_trans, config.perturbation_rot)
             for _ in range(config.horizon)]
    return _propagate(models, x0, traj, config.weights, perts)


@dataclass(frozen=True)
class PlanInfo:
    """Diagnostics from one plan() call: per-rollout costs and trajectories,
    the chosen rollout, and the count of degenerate inverse predictions."""

    costs: np.ndarray
    chosen: int
    poses: np.ndarray      # (Q, L+1, 3)
    controls: np.ndarray   # (Q, L, 2)
    inverse_fallbacks: int


def _draw_perturbations(master: int, q: int, config: MpcConfig) -> list[Pose2]:
    """Per-rollout perturbation stream: seeded by (master, q) so the first
    rollouts of a larger batch replicate a smaller batch exactly."""
    rng_q = np.random.default_rng([master, q])
    return [sample_perturbation(rng_q, config.perturbation_trans, config.perturbation_rot)
            for _ in range(config.horizon)]


def plan(models, x0: Pose2, traj: ReferenceTrajectory, config: MpcConfig,
         rng: np.random.Generator) -> Control:
    """Next control to execute. With Q = 0, returns the inverse model's
    greedy prediction for the unperturbed desired motion."""
    return plan_detailed(models, x0, traj, config, rng)[0]


def plan_detailed(models, x0: Pose2, traj: ReferenceTrajectory, config: MpcConfig,
                  rng: np.random.Generator) -> tuple[Control, Optional[PlanInfo]]:
    if config.rollouts == 0:
        j = nearest_waypoint(x0, traj, config.weights)
        return models.predict_inverse(desired_motion(x0, traj, j)), None

    q_n, horizon = config.rollouts, config.horizon
    master = int(rng.integers(0, 2 ** 63))
    pert_arr = np.empty((q_n, horizon, 3))
    for q in range(q_n):
        for k, p in enumerate(_draw_perturbations(master, q, config)):
            pert_arr[q, k] = (p.x, p.y, p.theta)

    kernels = backend.compiled_kernels()
    if kernels is not None and isinstance(models, TransitionModels):
        info = _plan_batch_compiled(kernels, models, x0, traj, config, pert_arr)
    else:
        info = _plan_batch_python(models, x0, traj, config, pert_arr)
    first = info.controls[info.chosen, 0]
    return Control(float(first[0]), float(first[1])), info


def _plan_batch_python(models, x0, traj, config, pert_arr) -> PlanInfo:
    q_n, horizon, _ = pert_arr.shape
    costs = np.empty(q_n)
    poses = np.empty((q_n, horizon + 1, 3))
    controls = np.empty((q_n, horizon, 2))
    fallbacks = 0
    count_fallbacks = isinstance(models, TransitionModels)
    for q in range(q_n):
        perts = [Pose2(*pert_arr[q, k]) for k in range(horizon)]
        if count_fallbacks:
            traj_poses, traj_controls, fb = _propagate_counting(
                models, x0, traj, config.weights, perts)
            fallbacks += fb
        else:
            traj_poses, traj_controls = _propagate(models, x0, traj, config.weights, perts)
        costs[q] = rollout_cost(traj_poses, traj, config.weights)
        poses[q] = [p.as_array() for p in traj_poses]
        controls[q] = [(u.alpha, u.beta) for u in traj_controls]
    chosen = _argmin_lowest_index(costs)
    return PlanInfo(costs, chosen, poses, controls, fallbacks)


def _propagate_counting(models: TransitionModels, x0, traj, w, perts):
    poses = [x0]
    controls = []
    fallbacks = 0
    x = x0
    for g_xi in perts:
        j = nearest_waypoint(x, traj, w)
        g = compose(desired_motion(x, traj, j), g_xi)
        u, fb = models.predict_inverse_ex(g)
        fallbacks += fb
        x = compose(x, models.predict_forward(u))
        poses.append(x)
        controls.append(u)
    return poses, controls, fallbacks


def _plan_batch_compiled(kernels, models: TransitionModels, x0, traj, config,
                         pert_arr) -> PlanInfo:
    q_n, horizon, _ = pert_arr.shape
    pack = models.kernel_pack
    costs = np.empty(q_n)
    poses = np.empty((q_n, horizon + 1, 3))
    controls = np.empty((q_n, horizon, 2))
    fallbacks = kernels.rollout_batch(
        pack["fwd_x"], pack["fwd_w"], pack["fwd_mean"], pack["fwd_ls"],
        pack["inv_x"], pack["inv_w"], pack["inv_mean"], pack["inv_ls"],
        pack["inv_scale"], pack["train_alpha"], BETA_MAX,
        x0.as_array(), traj.as_array(),
        config.weights.w_pos, config.weights.w_rot,
        np.ascontiguousarray(pert_arr), costs, poses, controls,
    )
    chosen = _argmin_lowest_index(costs)
    return PlanInfo(costs, chosen, poses, controls, int(fallbacks))


def _argmin_lowest_index(costs: np.ndarray) -> int:
    return int(np.argmin(costs))  # np.argmin returns the first minimum
