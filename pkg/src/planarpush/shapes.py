"""Polygonal object geometry for the pushing plant.

Vertices are given counter-clockwise in the object body frame, in meters.
The body-frame origin is the reference point of the limit-surface model,
so it should sit inside the polygon.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np


class PolygonShape:
    """Simple CCW polygon with cached edge geometry for contact queries."""

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValueError("need at least 3 (x, y) vertices")
        area2 = _signed_area2(verts)
        if area2 <= 0.0:
            raise ValueError("vertices must be in counter-clockwise order")
        if _self_intersects(verts):
            raise ValueError("polygon must be simple (non-self-intersecting)")
        self.vertices = verts
        self._starts = verts
        self._edges = np.roll(verts, -1, axis=0) - verts
        self._edge_len2 = np.einsum("ij,ij->i", self._edges, self._edges)
        if np.any(self._edge_len2 <= 0.0):
            raise ValueError("degenerate (zero-length) polygon edge")

    @property
    def circumradius(self) -> float:
        """Largest vertex distance from the body-frame origin."""
        return float(np.max(np.hypot(self.vertices[:, 0], self.vertices[:, 1])))

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    @property
    def centroid(self) -> tuple[float, float]:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        a6 = 3.0 * _signed_area2(v)
        cx = float(np.sum((v[:, 0] + w[:, 0]) * cross) / a6)
        cy = float(np.sum((v[:, 1] + w[:, 1]) * cross) / a6)
        return (cx, cy)

    def closest_boundary_point(self, point) -> tuple[np.ndarray, float]:
        """Closest point on the polygon boundary to a body-frame point,
        and its distance."""
        p = np.asarray(point, dtype=np.float64)
        rel = p - self._starts
        t = np.clip(np.einsum("ij,ij->i", rel, self._edges) / self._edge_len2, 0.0, 1.0)
        candidates = self._starts + t[:, None] * self._edges
        d2 = np.einsum("ij,ij->i", candidates - p, candidates - p)
        i = int(np.argmin(d2))
        return candidates[i], float(math.sqrt(d2[i]))

    def contains(self, point) -> bool:
        """Even-odd ray-cast point-in-polygon test (boundary counts as in)."""
        x, y = float(point[0]), float(point[1])
        v = self.vertices
        n = len(v)
        inside = False
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            if (y1 > y) != (y2 > y):
                xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xi:
                    inside = not inside
        return inside


def _signed_area2(verts: np.ndarray) -> float:
    w = np.roll(verts, -1, axis=0)
    return float(np.sum(verts[:, 0] * w[:, 1] - w[:, 0] * verts[:, 1]))


def _self_intersects(verts: np.ndarray) -> bool:
    n = len(verts)
    segs = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint with a neighbor
            if _segments_cross(*segs[i], *segs[j]):
                return True
    return False


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0.0) and (o3 * o4 < 0.0)


def regular_polygon(n_sides: int, radius: float) -> PolygonShape:
    ang = 2.0 * math.pi * np.arange(n_sides) / n_sides
    return PolygonShape(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


def builtin_shapes() -> dict[str, PolygonShape]:
    """Fixed object set used across the benchmarks.

    cylinder_x is the model-learning object (a regular 32-gon standing in
    for a cylinder); the other four are the transfer targets.
    """
    square = 0.07 / 2.0
    return {
        "cylinder_x": regular_polygon(32, 0.04),
        "square_block": PolygonShape(
            [(square, -square), (square, square), (-square, square), (-square, -square)]
        ),
        "rectangle": PolygonShape(
            [(0.05, -0.03), (0.05, 0.03), (-0.05, 0.03), (-0.05, -0.03)]
        ),
        "l_shape": PolygonShape(
            [(-0.03, -0.03), (0.05, -0.03), (0.05, 0.0), (0.0, 0.0), (0.0, 0.05), (-0.03, 0.05)]
        ),
        "triangle": PolygonShape([(0.05, 0.0), (-0.03, 0.04), (-0.03, -0.04)]),
    }


def load_shape_file(path) -> PolygonShape:
    """Read a polygon from a text file: one 'x y' vertex pair per line
    (meters, CCW); blank lines and '#' comments are ignored."""
    verts = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'x y', got {raw!r}")
        verts.append((float(parts[0]), float(parts[1])))
    return PolygonShape(verts)


def save_shape_file(shape: PolygonShape, path) -> None:
    lines = [f"{x!r} {y!r}" for x, y in shape.vertices]
    Path(path).write_text("\n".join(lines) + "\n")
