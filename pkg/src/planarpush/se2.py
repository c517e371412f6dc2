"""Planar rigid-body (SE(2)) poses and the weighted configuration distance.

Poses are stored as (x, y, theta) with theta normalized to (-pi, pi];
the homogeneous 3x3 matrix form appears only in test oracles. All
operations are pure; sampling takes an explicit RNG handle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle into the half-open interval (-pi, pi]."""
    return math.pi - (math.pi - theta) % TWO_PI


@dataclass(frozen=True)
class Pose2:
    """A planar pose / rigid motion: translation (x, y) in meters, heading
    theta in radians, normalized to (-pi, pi] on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @staticmethod
    def identity() -> "Pose2":
        return Pose2(0.0, 0.0, 0.0)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=np.float64)

    @staticmethod
    def from_array(arr) -> "Pose2":
        return Pose2(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class DistanceWeights:
    """Weights of the configuration distance: w_pos per meter of positional
    error, w_rot meters per radian of heading error."""

    w_pos: float = 1.0
    w_rot: float = 0.05

    def __post_init__(self):
        if not self.w_pos > 0.0:
            raise ValueError(f"w_pos must be > 0, got {self.w_pos}")
        if self.w_rot < 0.0:
            raise ValueError(f"w_rot must be >= 0, got {self.w_rot}")


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Group composition a * b (apply b in the frame of a)."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def inverse(a: Pose2) -> Pose2:
    """Group inverse: compose(a, inverse(a)) is the identity."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(-(c * a.x + s * a.y), -(-s * a.x + c * a.y), -a.theta)


def relative_motion(origin: Pose2, target: Pose2) -> Pose2:
    """Body-frame motion g with compose(origin, g) == target."""
    return compose(inverse(origin), target)


def distance(a: Pose2, b: Pose2, w: DistanceWeights) -> float:
    """Weighted configuration distance: w_pos * |position difference|
    + w_rot * |wrapped heading difference|."""
    return (
        w.w_pos * math.hypot(a.x - b.x, a.y - b.y)
        + w.w_rot * abs(wrap_angle(a.theta - b.theta))
    )


def transform_point(pose: Pose2, point: tuple[float, float]) -> tuple[float, float]:
    """Map a body-frame point into the spatial frame."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    px, py = point
    return (pose.x + c * px - s * py, pose.y + s * px + c * py)


def inverse_transform_point(pose: Pose2, point: tuple[float, float]) -> tuple[float, float]:
    """Map a spatial point into the body frame of `pose`."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy = point[0] - pose.x, point[1] - pose.y
    return (c * dx + s * dy, -s * dx + c * dy)


def rotate_vector(theta: float, vec: tuple[float, float]) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return (c * vec[0] - s * vec[1], s * vec[0] + c * vec[1])


def sample_perturbation(rng: np.random.Generator, trans_mag: float, rot_mag: float) -> Pose2:
    """Random small rigid motion: translation uniform on the disc of radius
    trans_mag, rotation uniform on [-rot_mag, rot_mag].

    Always consumes exactly three draws from `rng`, so streams stay aligned
    when magnitudes are zero.
    """
    if trans_mag < 0.0 or rot_mag < 0.0:
        raise ValueError("perturbation magnitudes must be non-negative")
    r = trans_mag * math.sqrt(rng.uniform())
    phi = rng.uniform(0.0, TWO_PI)
    dtheta = rng.uniform(-rot_mag, rot_mag)
    return Pose2(r * math.cos(phi), r * math.sin(phi), dtheta)
