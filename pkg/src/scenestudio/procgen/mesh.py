"""Parametric mesh builders for every geometry node kind.

All builders return canonical meshes: triangle faces, 0-based indices,
sitting at the origin with +z up. Node transforms (position, uniform scale,
yaw) are applied later, at realization. Vertex and face counts are pure
functions of the parameters, so documents can state them without building.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TRUNK_SEGMENTS = 8
CANOPY_SEGMENTS = 8
CENTER_SEGMENTS = 8
TERRAIN_GRID = 32

DECIDUOUS_TYPES = ("maple", "birch")

# Proportions tying one trunk_height number to a whole tree.
TRUNK_RADIUS_FACTOR = 0.06     # trunk base radius = factor * trunk_height
PINE_CANOPY_RADIUS = 0.4       # pine canopy base radius = factor * canopy height
CANOPY_BASE_FRACTION = 0.5     # canopy starts at this fraction of trunk height
SPHERE_H_RADIUS = 0.4          # deciduous canopy horizontal radius = factor * canopy height


@dataclass(frozen=True)
class Mesh:
    vertices: tuple[tuple[float, float, float], ...]
    faces: tuple[tuple[int, int, int], ...]

    def counts(self) -> tuple[int, int]:
        return len(self.vertices), len(self.faces)

    def bounds(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        zs = [v[2] for v in self.vertices]
        return (min(xs), min(ys), min(zs)), (max(xs), max(ys), max(zs))


def merge(*meshes: Mesh) -> Mesh:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for m in meshes:
        base = len(vertices)
        vertices.extend(m.vertices)
        faces.extend(tuple(i + base for i in f) for f in m.faces)
    return Mesh(tuple(vertices), tuple(faces))


def _ring(radius: float, z: float, segments: int, phase: float = 0.0):
    pts = []
    for i in range(segments):
        a = phase + 2.0 * math.pi * i / segments
        pts.append((radius * math.cos(a), radius * math.sin(a), z))
    return pts


def cone(radius: float, z_base: float, z_apex: float, segments: int) -> Mesh:
    """Open cone: one base ring plus an apex. segments+1 verts, segments faces."""
    verts = _ring(radius, z_base, segments) + [(0.0, 0.0, z_apex)]
    apex = segments
    faces = tuple((i, (i + 1) % segments, apex) for i in range(segments))
    return Mesh(tuple(verts), faces)


def sphere_approx(center_z: float, radius_h: float, radius_v: float, segments: int) -> Mesh:
    """Two-ring sphere stand-in: rings at +-radius_v/2 (width sqrt(3)/2 of
    radius_h) plus two apexes. 2*segments+2 verts, 4*segments faces."""
    ring_r = radius_h * math.sqrt(3.0) / 2.0
    lower = _ring(ring_r, center_z - radius_v / 2.0, segments)
    upper = _ring(ring_r, center_z + radius_v / 2.0, segments)
    verts = lower + upper + [(0.0, 0.0, center_z - radius_v), (0.0, 0.0, center_z + radius_v)]
    lo_apex = 2 * segments
    hi_apex = 2 * segments + 1
    faces: list[tuple[int, int, int]] = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append((i, j, lo_apex))                       # bottom fan
        faces.append((segments + i, hi_apex, segments + j))  # top fan
        faces.append((i, segments + j, segments + i))        # band, split quads
        faces.append((i, j, segments + j))
    return Mesh(tuple(verts), tuple(faces))


def tree_mesh(trunk_height: float, canopy_ratio: float, leaf_type: str) -> Mesh:
    """Trunk cone plus a leaf_type-shaped canopy. Total height is
    trunk_height * (CANOPY_BASE_FRACTION + canopy_ratio), strictly growing
    in trunk_height."""
    canopy_height = canopy_ratio * trunk_height
    canopy_base = CANOPY_BASE_FRACTION * trunk_height
    trunk = cone(TRUNK_RADIUS_FACTOR * trunk_height, 0.0, trunk_height, TRUNK_SEGMENTS)
    if leaf_type == "pine":
        canopy = cone(PINE_CANOPY_RADIUS * canopy_height, canopy_base, canopy_base + canopy_height,
                      CANOPY_SEGMENTS)
    elif leaf_type in DECIDUOUS_TYPES:
        canopy = sphere_approx(canopy_base + canopy_height / 2.0,
                               radius_h=SPHERE_H_RADIUS * canopy_height,
                               radius_v=canopy_height / 2.0,
                               segments=CANOPY_SEGMENTS)
    else:
        raise ValueError(f"unknown leaf type {leaf_type!r}")
    return merge(trunk, canopy)


def tree_counts(leaf_type: str) -> tuple[int, int]:
    trunk_v, trunk_f = TRUNK_SEGMENTS + 1, TRUNK_SEGMENTS
    if leaf_type == "pine":
        return trunk_v + CANOPY_SEGMENTS + 1, trunk_f + CANOPY_SEGMENTS
    return trunk_v + 2 * CANOPY_SEGMENTS + 2, trunk_f + 4 * CANOPY_SEGMENTS


def disc(radius: float, segments: int) -> Mesh:
    """Fan disc at z=0: segments+1 verts, segments faces."""
    verts = _ring(radius, 0.0, segments) + [(0.0, 0.0, 0.0)]
    center = segments
    faces = tuple((i, (i + 1) % segments, center) for i in range(segments))
    return Mesh(tuple(verts), faces)


def petal_mesh(angle: float, petal_length: float, petal_curl: float, center_radius: float,
               petal_count: int) -> Mesh:
    """One petal pointing along `angle`: 5 verts, 3 faces. The tip bends
    upward by curl * 90 degrees, keeping the petal's surface length, so
    curl=0 lies flat in the z=0 plane."""
    half = 0.9 * math.pi / petal_count
    bend = petal_curl * math.pi / 2.0
    r_mid = center_radius + 0.5 * petal_length
    r_tip = r_mid + 0.5 * petal_length * math.cos(bend)
    z_tip = 0.5 * petal_length * math.sin(bend)

    def at(radius: float, offset: float, z: float) -> tuple[float, float, float]:
        a = angle + offset
        return (radius * math.cos(a), radius * math.sin(a), z)

    verts = (
        at(center_radius, -half, 0.0),
        at(center_radius, half, 0.0),
        at(r_mid, half * 0.7, 0.0),
        at(r_mid, -half * 0.7, 0.0),
        at(r_tip, 0.0, z_tip),
    )
    faces = ((0, 1, 2), (0, 2, 3), (3, 2, 4))
    return Mesh(verts, faces)


def flower_mesh(petal_count: int, petal_length: float, petal_curl: float,
                center_radius: float) -> Mesh:
    """Center disc plus a fan of petals: 9 + 5*petal_count verts,
    8 + 3*petal_count faces."""
    parts = [disc(center_radius, CENTER_SEGMENTS)]
    for k in range(petal_count):
        angle = 2.0 * math.pi * k / petal_count
        parts.append(petal_mesh(angle, petal_length, petal_curl, center_radius, petal_count))
    return merge(*parts)


def flower_counts(petal_count: int) -> tuple[int, int]:
    return CENTER_SEGMENTS + 1 + 5 * petal_count, CENTER_SEGMENTS + 3 * petal_count


def heightfield_mesh(size: float, height_at) -> Mesh:
    """Square grid surface over [-size/2, size/2]^2 sampled from
    height_at(x, y): (grid+1)^2 verts, 2*grid^2 faces."""
    n = TERRAIN_GRID
    half = size / 2.0
    verts = []
    for j in range(n + 1):
        for i in range(n + 1):
            x = -half + size * i / n
            y = -half + size * j / n
            verts.append((x, y, height_at(x, y)))
    faces = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = a + (n + 1)
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return Mesh(tuple(verts), tuple(faces))


def heightfield_counts() -> tuple[int, int]:
    n = TERRAIN_GRID
    return (n + 1) * (n + 1), 2 * n * n


def plane_mesh(side: float, z: float) -> Mesh:
    """Square plane centered on the origin: 4 verts, 2 faces."""
    h = side / 2.0
    verts = ((-h, -h, z), (h, -h, z), (h, h, z), (-h, h, z))
    return Mesh(verts, ((0, 1, 2), (0, 2, 3)))


def plane_counts() -> tuple[int, int]:
    return 4, 2
