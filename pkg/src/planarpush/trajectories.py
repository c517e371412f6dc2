"""Reference trajectory generation and the tracking-error metric.

Waypoint headings are tangent to the path. The MAE metric is positional
only (reported in millimeters) and is measured against the waypoint
polyline, not the nearest waypoint, so waypoint density cannot distort it.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .mpc import ReferenceTrajectory
from .se2 import Pose2

DEFAULT_WAYPOINT_SPACING = 0.015  # used when a generator chooses M itself


def gen_circle(radius: float, n_waypoints: int = 60,
               center: tuple[float, float] = (0.0, 0.0)) -> ReferenceTrajectory:
    """Counter-clockwise circle starting at angle 0, M equally spaced
    waypoints with tangent headings."""
    if radius <= 0.0 or n_waypoints < 1:
        raise ValueError("need positive radius and at least one waypoint")
    pts = []
    for i in range(n_waypoints):
        ang = 2.0 * math.pi * i / n_waypoints
        pts.append(Pose2(center[0] + radius * math.cos(ang),
                         center[1] + radius * math.sin(ang),
                         ang + 0.5 * math.pi))
    return ReferenceTrajectory(tuple(pts))


def gen_square(side: float, n_waypoints: int = 52,
               center: tuple[float, float] = (0.0, 0.0)) -> ReferenceTrajectory:
    """Counter-clockwise square; corners are always exact waypoints."""
    if side <= 0.0:
        raise ValueError("side must be positive")
    h = side / 2.0
    corners = [(center[0] + h, center[1] - h), (center[0] + h, center[1] + h),
               (center[0] - h, center[1] + h), (center[0] - h, center[1] - h)]
    return polyline_trajectory(corners, n_waypoints, closed=True)


LETTER_POLYLINES: dict[str, list[tuple[float, float]]] = {
    # Single-stroke letters on a unit-height grid; turns range from 90
    # degrees (corners) up to 180 degrees (retraced strokes).
    "R": [(0.0, 0.0), (0.0, 1.0), (0.45, 1.0), (0.55, 0.88), (0.55, 0.67),
          (0.45, 0.55), (0.0, 0.55), (0.5, 0.0)],
    "I": [(0.0, 1.0), (0.0, 0.0), (0.0, 1.0)],
    "C": [(0.62, 0.85), (0.38, 1.0), (0.14, 0.85), (0.02, 0.62), (0.02, 0.38),
          (0.14, 0.15), (0.38, 0.0), (0.62, 0.15)],
    "E": [(0.5, 1.0), (0.0, 1.0), (0.0, 0.5), (0.4, 0.5), (0.0, 0.5),
          (0.0, 0.0), (0.5, 0.0)],
}


def gen_letter(letter: str, scale: float = 0.3,
               n_waypoints: Optional[int] = None,
               center: tuple[float, float] = (0.0, 0.0)) -> ReferenceTrajectory:
    """Letter-shaped open trajectory ('R', 'I', 'C' or 'E'), scaled to the
    given height in meters and centered on `center`."""
    key = letter.upper()
    if key not in LETTER_POLYLINES:
        raise ValueError(f"unknown letter {letter!r}; choose from R, I, C, E")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    raw = np.array(LETTER_POLYLINES[key], dtype=np.float64) * scale
    mid = 0.5 * (raw.min(axis=0) + raw.max(axis=0))
    pts = [(x - mid[0] + center[0], y - mid[1] + center[1]) for x, y in raw]
    if n_waypoints is None:
        n_waypoints = max(len(pts), round(_polyline_length(pts) / DEFAULT_WAYPOINT_SPACING) + 1)
    return polyline_trajectory(pts, n_waypoints, closed=False)


def polyline_trajectory(corners: Sequence[tuple[float, float]], n_waypoints: int,
                        closed: bool) -> ReferenceTrajectory:
    """Distribute waypoints along a polyline by arc length, keeping every
    corner as an exact waypoint. Headings follow the outgoing segment (the
    incoming one for the final waypoint of an open path)."""
    pts = list(corners)
    if closed:
        segs = list(zip(pts, pts[1:] + pts[:1]))
    else:
        segs = list(zip(pts, pts[1:]))
    lengths = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in segs]
    if any(l <= 0.0 for l in lengths):
        raise ValueError("polyline has a zero-length segment")
    budget = n_waypoints if closed else n_waypoints - 1
    if budget < len(segs):
        raise ValueError(f"need at least {len(segs) + (0 if closed else 1)} waypoints "
                         "to keep all corners")
    counts = _apportion(lengths, budget)

    waypoints: list[Pose2] = []
    for (a, b), k in zip(segs, counts):
        heading = math.atan2(b[1] - a[1], b[0] - a[0])
        for i in range(k):
            t = i / k
            waypoints.append(Pose2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]),
                                   heading))
    if not closed:
        last = segs[-1][1]
        heading = math.atan2(last[1] - segs[-1][0][1], last[0] - segs[-1][0][0])
        waypoints.append(Pose2(last[0], last[1], heading))
    return ReferenceTrajectory(tuple(waypoints))


def _apportion(lengths: Sequence[float], total: int) -> list[int]:
    """Largest-remainder split of `total` subdivisions, at least one per
    segment so corners survive."""
    n = len(lengths)
    weights = np.asarray(lengths) / sum(lengths)
    raw = weights * (total - n)
    counts = np.floor(raw).astype(int) + 1
    remainder = total - int(counts.sum())
    order = np.argsort(-(raw - np.floor(raw)), kind="stable")
    for i in range(remainder):
        counts[order[i % n]] += 1
    return counts.tolist()


def _polyline_length(pts: Sequence[tuple[float, float]]) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))


def point_to_polyline_distance(point: tuple[float, float],
                               traj: ReferenceTrajectory) -> float:
    """Distance from a point to the open chain of waypoint segments."""
    arr = traj.as_array()
    px, py = point
    if len(arr) == 1:
        return math.hypot(px - arr[0, 0], py - arr[0, 1])
    a = arr[:-1, :2]
    b = arr[1:, :2]
    e = b - a
    rel = np.array([px, py]) - a
    t = np.clip(np.einsum("ij,ij->i", rel, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
    closest = a + t[:, None] * e
    d2 = np.einsum("ij,ij->i", closest - np.array([px, py]), closest - np.array([px, py]))
    return float(math.sqrt(d2.min()))


def compute_mae(poses: Sequence[Pose2], traj: ReferenceTrajectory) -> float:
    """Mean positional distance (mm) from the executed poses to the
    reference polyline; rotation is excluded."""
    if len(poses) < 1:
        raise ValueError("need at least one executed pose")
    total = sum(point_to_polyline_distance((p.x, p.y), traj) for p in poses)
    return 1000.0 * total / len(poses)
