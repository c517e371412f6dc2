"""Ground-truth quasi-static planar-pushing simulator.

A disc pusher advances in micro-steps through the workspace; whenever it
contacts the polygonal object, the object's twist follows the ellipsoidal
limit-surface model with a stick/slide mode switch at the friction cone.
The controller side of the package never sees any of these internals --
it only observes poses before and after a push.

Twist convention: (v_x, v_y, omega) is the body-frame object velocity per
unit of pusher travel, i.e. for a pusher moving at unit speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .se2 import Pose2, compose, inverse_transform_point, sample_perturbation
from .shapes import PolygonShape

CONTACT_TOL = 1e-9


@dataclass(frozen=True)
class DisturbanceParams:
    """Random pose kick applied after a push with the given probability."""

    trans_mag: float = 0.005
    rot_mag: float = 0.05
    probability: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("disturbance probability must be in [0, 1]")
        if self.trans_mag < 0.0 or self.rot_mag < 0.0:
            raise ValueError("disturbance magnitudes must be non-negative")


@dataclass(frozen=True)
class PlantParams:
    limit_surface_c: float = 0.05      # torque/force ratio of the limit surface [m]
    contact_friction_mu: float = 0.3
    pusher_radius: float = 0.008       # [m]
    integration_step: float = 5e-4     # pusher micro-step [m]
    motion_epsilon: float = 2e-4       # object-motion detection threshold [m]
    push_distance_d: float = 0.02      # counted pusher travel per push [m]
    virtual_circle_R: float = 0.08     # push start radius [m]
    disturbance: Optional[DisturbanceParams] = None

    def __post_init__(self):
        for name in ("limit_surface_c", "pusher_radius", "integration_step",
                     "motion_epsilon", "push_distance_d", "virtual_circle_R"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.contact_friction_mu < 0.0:
            raise ValueError("contact_friction_mu must be >= 0")


def default_params(shape: PolygonShape, **overrides) -> PlantParams:
    """Plant parameters with the virtual circle sized to the shape."""
    params = PlantParams(virtual_circle_R=shape.circumradius + 0.04, **overrides)
    check_params(shape, params)
    return params


def check_params(shape: PolygonShape, params: PlantParams) -> None:
    if params.virtual_circle_R <= shape.circumradius + params.pusher_radius:
        raise ValueError(
            "virtual_circle_R must exceed circumradius + pusher_radius "
            f"({params.virtual_circle_R} <= {shape.circumradius} + {params.pusher_radius})"
        )


@dataclass(frozen=True)
class PlantState:
    object_pose: Pose2
    pusher_position: tuple[float, float]


@dataclass(frozen=True)
class Contact:
    """Body-frame contact: closest boundary point to the pusher center,
    unit normal pointing into the object, and disc/boundary separation
    (negative means penetration)."""

    point: tuple[float, float]
    normal: tuple[float, float]
    separation: float


def contact_query(shape: PolygonShape, pose: Pose2, pusher: tuple[float, float],
                  r_p: float) -> Optional[Contact]:
    """Contact between the pusher disc (center `pusher`, spatial frame) and
    the object; None when separated by more than CONTACT_TOL."""
    c = _boundary_contact(shape, pose, pusher, r_p)
    return c if c.separation <= CONTACT_TOL else None


def _boundary_contact(shape: PolygonShape, pose: Pose2, pusher, r_p: float) -> Contact:
    p_body = inverse_transform_point(pose, pusher)
    cp, dist = shape.closest_boundary_point(p_body)
    if shape.contains(p_body):
        sep = -(dist + r_p)
        nx, ny = _unit(p_body[0] - cp[0], p_body[1] - cp[1], dist)
    else:
        sep = dist - r_p
        nx, ny = _unit(cp[0] - p_body[0], cp[1] - p_body[1], dist)
    return Contact((float(cp[0]), float(cp[1])), (nx, ny), sep)


def _unit(dx: float, dy: float, norm: float) -> tuple[float, float]:
    if norm < 1e-12:
        return (1.0, 0.0)  # degenerate: pusher center on the boundary
    return (dx / norm, dy / norm)


def clearance(shape: PolygonShape, pose: Pose2, pusher, r_p: float) -> float:
    """Signed pusher-disc/object separation (negative = penetrating)."""
    return _boundary_contact(shape, pose, pusher, r_p).separation


def quasi_static_twist(contact_point, normal, pusher_velocity, params: PlantParams):
    """Object body twist for a unit pusher velocity at the given contact.

    Sticking solution from the ellipsoidal limit surface (force through the
    contact, twist proportional to the force under A = diag(1, 1, 1/c^2)):

        v_x = ((c^2 + x_c^2) u_x + x_c y_c u_y) / (c^2 + x_c^2 + y_c^2)
        v_y = (x_c y_c u_x + (c^2 + y_c^2) u_y) / (c^2 + x_c^2 + y_c^2)
        omega = (x_c v_y - y_c v_x) / c^2

    The implied contact force is parallel to (v_x, v_y); when it leaves the
    friction cone of half-angle atan(mu) about the inward normal, the force
    is projected onto the nearer cone edge and the twist is rescaled so the
    contact-normal velocity matches the pusher (slide mode).

    Returns ((v_x, v_y, omega), mode) with mode in {"stick", "slide"}.
    Raises ValueError if the velocity separates from the object.
    """
    x_c, y_c = contact_point
    n_x, n_y = normal
    u_x, u_y = pusher_velocity
    if u_x * n_x + u_y * n_y <= 0.0:
        raise ValueError("pusher velocity does not press into the object")

    c2 = params.limit_surface_c ** 2
    denom = c2 + x_c * x_c + y_c * y_c
    v_x = ((c2 + x_c * x_c) * u_x + x_c * y_c * u_y) / denom
    v_y = (x_c * y_c * u_x + (c2 + y_c * y_c) * u_y) / denom
    omega = (x_c * v_y - y_c * v_x) / c2

    # Force angle relative to the inward normal (force is parallel to v).
    cone = math.atan(params.contact_friction_mu)
    delta = math.atan2(v_y, v_x) - math.atan2(n_y, n_x)
    delta = math.atan2(math.sin(delta), math.cos(delta))
    if abs(delta) <= cone + 1e-12:
        return (v_x, v_y, omega), "stick"

    # Slide: force on the nearer cone edge, normal velocity matched.
    edge = cone if delta > 0.0 else -cone
    ce, se = math.cos(edge), math.sin(edge)
    e_x, e_y = ce * n_x - se * n_y, se * n_x + ce * n_y
    m_over_c2 = (x_c * e_y - y_c * e_x) / c2
    vc_x = e_x - m_over_c2 * y_c
    vc_y = e_y + m_over_c2 * x_c
    vc_n = vc_x * n_x + vc_y * n_y
    if vc_n <= 1e-12:
        return (0.0, 0.0, 0.0), "slide"  # degenerate sliding configuration
    s = (u_x * n_x + u_y * n_y) / vc_n
    return (s * e_x, s * e_y, s * m_over_c2), "slide"


def _twist_step(vx: float, vy: float, omega: float, h: float) -> Pose2:
    """Exact SE(2) motion of a constant body twist integrated over travel h."""
    dth = omega * h
    tx, ty = vx * h, vy * h
    if abs(dth) < 1e-9:
        return Pose2(tx, ty, dth)
    s, c = math.sin(dth), math.cos(dth)
    return Pose2((s * tx - (1.0 - c) * ty) / dth, ((1.0 - c) * tx + s * ty) / dth, dth)


@dataclass(frozen=True)
class PushResult:
    moved: bool                 # object motion exceeded motion_epsilon
    counted_travel: float       # pusher travel after motion was detected
    total_travel: float

    @property
    def miss(self) -> bool:
        return not self.moved


def execute_push(state: PlantState, shape: PolygonShape, start, direction,
                 params: PlantParams, rng: Optional[np.random.Generator] = None
                 ) -> tuple[PlantState, PushResult]:
    """Teleport the pusher to `start`, advance along `direction` (spatial
    unit vector), integrating object twists while in contact.

    Travel is counted toward push_distance_d only once the object's
    accumulated positional motion first exceeds motion_epsilon; the push
    aborts as a miss after 4 * virtual_circle_R of total travel.
    """
    dx, dy = float(direction[0]), float(direction[1])
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        raise ValueError("push direction must be a nonzero vector")
    dx, dy = dx / norm, dy / norm

    pose = state.object_pose
    px, py = float(start[0]), float(start[1])
    if clearance(shape, pose, (px, py), params.pusher_radius) < -1e-6:
        raise ValueError("push start point overlaps the object")

    h = params.integration_step
    budget = 4.0 * params.virtual_circle_R
    d_goal = params.push_distance_d
    total = 0.0
    counted = 0.0
    acc_motion = 0.0
    moved = False

    while counted < d_goal - 1e-12 and total < budget - 1e-12:
        step = min(h, budget - total)
        if moved:
            step = min(step, d_goal - counted)

        sep0 = clearance(shape, pose, (px, py), params.pusher_radius)
        if sep0 > CONTACT_TOL:
            # Free flight: cover at most the current separation per jump so
            # contact cannot be skipped, then bisect onto the surface.
            step = max(step, min(sep0, budget - total))
            nx_, ny_ = px + step * dx, py + step * dy
            if clearance(shape, pose, (nx_, ny_), params.pusher_radius) < -CONTACT_TOL:
                step = _impact_fraction(shape, pose, (px, py), (dx, dy), step,
                                        params.pusher_radius) * step
                nx_, ny_ = px + step * dx, py + step * dy
            px, py = nx_, ny_
            motion = 0.0
        else:
            px, py = px + step * dx, py + step * dy
            pose, motion = _resolve_contact(shape, pose, (px, py), (dx, dy), params)

        total += step
        if moved:
            counted += step
        elif motion > 0.0:
            prev = acc_motion
            acc_motion += motion
            if acc_motion > params.motion_epsilon:
                moved = True
                # Count only the post-detection fraction of this step.
                frac = (acc_motion - params.motion_epsilon) / motion
                counted += frac * step

    if params.disturbance is not None and rng is not None:
        dist = params.disturbance
        if rng.uniform() < dist.probability:
            kick = sample_perturbation(rng, dist.trans_mag, dist.rot_mag)
            pose = compose(pose, kick)

    new_state = PlantState(pose, (px, py))
    return new_state, PushResult(moved, counted, total)


def _resolve_contact(shape, pose, pusher, direction, params):
    """One in-contact micro step: integrate the quasi-static twist over the
    pusher advance, then project out residual penetration. Returns the new
    pose and the object's positional motion during the step."""
    contact = contact_query(shape, pose, pusher, params.pusher_radius)
    motion = 0.0
    if contact is not None:
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        ub = (c * direction[0] + s * direction[1],
              -s * direction[0] + c * direction[1])
        n = contact.normal
        if ub[0] * n[0] + ub[1] * n[1] > 1e-12:
            (vx, vy, om), _mode = quasi_static_twist(contact.point, n, ub, params)
            new_pose = compose(pose, _twist_step(vx, vy, om, params.integration_step))
            motion += math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)
            pose = new_pose
        # Penetration projection: translate the object along the inward
        # normal until the disc rests on the boundary.
        after = contact_query(shape, pose, pusher, params.pusher_radius)
        if after is not None and after.separation < 0.0:
            depth = -after.separation
            pose = compose(pose, Pose2(after.normal[0] * depth, after.normal[1] * depth, 0.0))
            motion += depth
    return pose, motion


def _impact_fraction(shape, pose, start, direction, step, r_p, tol=1e-12):
    """Bisect the advance fraction where the pusher disc first touches."""
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        sep = clearance(shape, pose,
                        (start[0] + mid * step * direction[0],
                         start[1] + mid * step * direction[1]), r_p)
        if sep > 0.0:
            lo = mid
        else:
            hi = mid
        if (hi - lo) * step < tol:
            break
    return hi


class PushingPlant:
    """Mutable plant wrapper: owns the object pose, pusher position and the
    disturbance RNG. One instance per episode; clone() for what-if rollouts."""

    def __init__(self, shape: PolygonShape, params: Optional[PlantParams] = None,
                 pose: Pose2 = Pose2.identity(),
                 rng: Optional[np.random.Generator] = None):
        self.shape = shape
        self.params = params if params is not None else default_params(shape)
        check_params(shape, self.params)
        far = self.params.virtual_circle_R + 10.0 * self.params.pusher_radius
        self.state = PlantState(pose, (pose.x + far, pose.y))
        self.rng = rng

    @property
    def object_pose(self) -> Pose2:
        return self.state.object_pose

    @property
    def pusher_position(self) -> tuple[float, float]:
        return self.state.pusher_position

    def reset(self, pose: Pose2) -> None:
        far = self.params.virtual_circle_R + 10.0 * self.params.pusher_radius
        self.state = PlantState(pose, (pose.x + far, pose.y))

    def clone(self, disturbance: bool = True) -> "PushingPlant":
        params = self.params
        if not disturbance and params.disturbance is not None:
            params = replace(params, disturbance=None)
        twin = PushingPlant(self.shape, params, self.state.object_pose, rng=None)
        twin.state = PlantState(self.state.object_pose, self.state.pusher_position)
        return twin

    def execute_push(self, start, direction) -> PushResult:
        self.state, result = execute_push(self.state, self.shape, start, direction,
                                          self.params, self.rng)
        return result

    def pusher_clearance(self, point) -> float:
        return clearance(self.shape, self.state.object_pose, point,
                         self.params.pusher_radius)
