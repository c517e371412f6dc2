"""Translate controls into plant pushes.

A control (alpha, beta) starts on the virtual circle of radius R attached
to the object body frame: the pusher goes to P at angle alpha and advances
toward the object along the center-pointing direction rotated by beta
(positive beta counter-clockwise).

The smoothed variant skips the retreat to the circle when consecutive
controls are similar: the pusher moves to a nearer point P' at its current
center distance r, chosen by the law of sines so that the segment P -> P'
is parallel to the control's nominal push direction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from .models import Control, control_distance
from .plant import PushingPlant
from .se2 import Pose2, rotate_vector, transform_point

log = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.3


def push_geometry(x: Pose2, u: Control, radius: float
                  ) -> tuple[tuple[float, float], tuple[float, float]]:
    """Spatial start point P and unit push direction for control u on an
    object at pose x."""
    if radius <= 0.0:
        raise ValueError("virtual circle radius must be positive")
    p = transform_point(x, (radius * math.cos(u.alpha), radius * math.sin(u.alpha)))
    heading = u.alpha + u.beta
    direction_body = (-math.cos(heading), -math.sin(heading))
    return p, rotate_vector(x.theta, direction_body)


@dataclass(frozen=True)
class ExecResult:
    missed: bool
    smoothed: bool = False
    fallback: bool = False  # smoothed path requested but geometrically degenerate


def execute(plant: PushingPlant, u: Control) -> tuple[Pose2, ExecResult]:
    """Full (non-smoothed) execution: retreat to the virtual circle, push
    for the plant's configured distance, return the observed pose."""
    start, direction = push_geometry(plant.object_pose, u, plant.params.virtual_circle_R)
    result = plant.execute_push(start, direction)
    if result.miss:
        log.debug("push (alpha=%.3f, beta=%.3f) missed the object", u.alpha, u.beta)
    return plant.object_pose, ExecResult(missed=result.miss)


def smoothened_execute(plant: PushingPlant, u: Control, u_prev: Optional[Control],
                       sigma: float = DEFAULT_SIGMA) -> tuple[Pose2, ExecResult]:
    """Execute u, re-approaching from a near point P' instead of the circle
    when u is within sigma of the previous control.

    Falls back to the full execution when no previous control exists or the
    law-of-sines construction degenerates (arcsin argument out of range,
    pusher too close to the object origin, or P' starting in contact).
    """
    if u_prev is None or control_distance(u_prev, u) >= sigma:
        return execute(plant, u)

    pose = plant.object_pose
    params = plant.params
    ex, ey = plant.pusher_position
    r = math.hypot(ex - pose.x, ey - pose.y)
    p_prime = _smoothed_start(u, params.virtual_circle_R, r, params.pusher_radius)
    if p_prime is None:
        pose_after, res = execute(plant, u)
        return pose_after, ExecResult(missed=res.missed, fallback=True)

    start = transform_point(pose, p_prime)
    if plant.pusher_clearance(start) < -1e-6:
        pose_after, res = execute(plant, u)
        return pose_after, ExecResult(missed=res.missed, fallback=True)

    p_circle = transform_point(
        pose, (params.virtual_circle_R * math.cos(u.alpha),
               params.virtual_circle_R * math.sin(u.alpha)))
    dx, dy = start[0] - p_circle[0], start[1] - p_circle[1]
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        pose_after, res = execute(plant, u)
        return pose_after, ExecResult(missed=res.missed, fallback=True)

    result = plant.execute_push(start, (dx / norm, dy / norm))
    return plant.object_pose, ExecResult(missed=result.miss, smoothed=True)


def _smoothed_start(u: Control, radius: float, r: float, pusher_radius: float
                    ) -> Optional[tuple[float, float]]:
    """Body-frame P' on the push ray of u at distance r from the object
    origin; None when the construction degenerates."""
    if r < pusher_radius + 1e-6 or r >= radius:
        return None
    arg = radius * math.sin(u.beta) / r
    if abs(arg) > 1.0:
        return None
    gamma = u.alpha + u.beta - math.asin(arg)
    return (r * math.cos(gamma), r * math.sin(gamma))
