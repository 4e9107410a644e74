"""Deterministic scene synthesis from a validated call program.

Executing a program yields a SceneGraph: typed nodes with transforms,
parametric geometry descriptors, and attributes. Everything random flows
from (seed, stream, counter) where the stream is the generating function's
catalog position, so regenerating any part of the scene is reproducible in
isolation and two runs of the same program are identical, byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..callspec import TypedValue
from ..codegen import SceneProgram
from ..hashing import canonical_json_bytes, sha256_hex
from .mesh import (
    TERRAIN_GRID,
    flower_counts,
    heightfield_counts,
    plane_counts,
    tree_counts,
)
from .rng import CounterRng, draw_unit

NODE_KINDS = ("terrain", "tree", "flower", "sky", "snow", "fog", "water", "camera")

LATTICE = 9                      # value-noise control points per side
AMPLITUDE_FACTOR = 0.08          # relief amplitude = roughness * size * factor
SCALE_JITTER = 0.15              # instance scale in [1 - j, 1 + j]
MAX_PLACEMENT_REDRAWS = 100
SNOW_WHITE = (1.0, 1.0, 1.0)


class EngineError(ValueError):
    """Program references functions the engine has no builder for."""


def round_half_up(x: float) -> int:
    """Instance-count rounding: .5 always goes up, never banker's."""
    return int(math.floor(x + 0.5))


def instance_count(density: float, size: float) -> int:
    return round_half_up(density * size * size)


def sun_direction(elevation_deg: float, rotation_deg: float) -> tuple[float, float, float]:
    """Unit vector toward the sun; elevation 90 is the zenith (0, 0, 1),
    rotation is compass-style from +Y."""
    e = math.radians(elevation_deg)
    r = math.radians(rotation_deg % 360.0)
    return (math.cos(e) * math.sin(r), math.cos(e) * math.cos(r), math.sin(e))


def lerp_color(a, b, t: float) -> tuple[float, float, float]:
    return tuple(ca + (cb - ca) * t for ca, cb in zip(a, b))


class TerrainField:
    """Smooth value-noise height function over a square.

    A LATTICE x LATTICE grid of unit draws (stream = the terrain call's
    catalog position) is interpolated bilinearly, so heights never leave the
    lattice extrema scaled into [-amplitude, amplitude].
    """

    def __init__(self, seed: int, stream: int, size: float, roughness: float):
        self.size = size
        self.amplitude = roughness * size * AMPLITUDE_FACTOR
        self.lattice = [
            [draw_unit(seed, stream, j * LATTICE + i) for i in range(LATTICE)]
            for j in range(LATTICE)
        ]

    @classmethod
    def flat(cls, size: float) -> "TerrainField":
        field = cls.__new__(cls)
        field.size = size
        field.amplitude = 0.0
        field.lattice = [[0.5] * LATTICE for _ in range(LATTICE)]
        return field

    def _unit_at(self, x: float, y: float) -> float:
        half = self.size / 2.0
        u = min(max((x + half) / self.size, 0.0), 1.0) * (LATTICE - 1)
        v = min(max((y + half) / self.size, 0.0), 1.0) * (LATTICE - 1)
        i, j = min(int(u), LATTICE - 2), min(int(v), LATTICE - 2)
        fu, fv = u - i, v - j
        row0 = self.lattice[j][i] * (1 - fu) + self.lattice[j][i + 1] * fu
        row1 = self.lattice[j + 1][i] * (1 - fu) + self.lattice[j + 1][i + 1] * fu
        return row0 * (1 - fv) + row1 * fv

    def height(self, x: float, y: float) -> float:
        return (self._unit_at(x, y) * 2.0 - 1.0) * self.amplitude

    def z_range(self) -> tuple[float, float]:
        flat = [v for row in self.lattice for v in row]
        return (
            (min(flat) * 2.0 - 1.0) * self.amplitude,
            (max(flat) * 2.0 - 1.0) * self.amplitude,
        )


@dataclass(frozen=True)
class Transform:
    """Node placement: position, uniform scale, yaw in degrees."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0
    yaw: float = 0.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def apply(self, point: tuple[float, float, float]) -> tuple[float, float, float]:
        a = math.radians(self.yaw)
        c, s = math.cos(a), math.sin(a)
        x, y, z = (v * self.scale for v in point)
        return (
            x * c - y * s + self.position[0],
            x * s + y * c + self.position[1],
            z + self.position[2],
        )

    def to_plain(self) -> dict:
        return {"position": list(self.position), "scale": self.scale, "yaw": self.yaw}


@dataclass(frozen=True)
class Geometry:
    """Parametric mesh descriptor: shape name plus the numbers needed to
    rebuild the mesh (and to state vertex/face counts without building)."""

    shape: str
    params: tuple[tuple[str, float | int | str], ...]

    def param(self, name: str):
        for n, v in self.params:
            if n == name:
                return v
        raise KeyError(name)

    def counts(self) -> tuple[int, int]:
        if self.shape == "heightfield":
            return heightfield_counts()
        if self.shape == "tree":
            return tree_counts(self.param("leaf_type"))
        if self.shape == "flower":
            return flower_counts(int(self.param("petal_count")))
        if self.shape == "plane":
            return plane_counts()
        raise EngineError(f"unknown geometry shape {self.shape!r}")

    def to_plain(self) -> dict:
        verts, faces = self.counts()
        return {
            "shape": self.shape,
            "params": {n: v for n, v in self.params},
            "vertices": verts,
            "faces": faces,
        }


@dataclass(frozen=True)
class SceneNode:
    """One addressable scene element. Attribute-only kinds (sky, fog,
    camera) carry no geometry. `source` names the catalog function whose
    call produced the node."""

    id: str
    kind: str
    transform: Transform
    geometry: Geometry | None
    attributes: tuple[tuple[str, TypedValue], ...]
    source: str = ""

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")

    def attribute(self, name: str) -> TypedValue:
        for n, v in self.attributes:
            if n == name:
                return v
        raise KeyError(name)

    def has_attribute(self, name: str) -> bool:
        return any(n == name for n, _ in self.attributes)

    def with_attribute(self, name: str, value: TypedValue) -> "SceneNode":
        attrs = tuple((n, value if n == name else v) for n, v in self.attributes)
        if not self.has_attribute(name):
            attrs = attrs + ((name, value),)
        return replace(self, attributes=attrs)

    def to_plain(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "source": self.source,
            "transform": self.transform.to_plain(),
            "geometry": self.geometry.to_plain() if self.geometry else None,
            "attributes": {n: {"kind": v.kind, "value": v.to_plain()} for n, v in self.attributes},
        }


@dataclass(frozen=True)
class SceneGraph:
    """All nodes plus the graph-level bounding box (zero volume when there
    is no geometry) and the seed that produced everything."""

    nodes: tuple[SceneNode, ...]
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    seed: int

    def node(self, node_id: str) -> SceneNode | None:
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None

    def nodes_of_kind(self, kind: str) -> list[SceneNode]:
        return [n for n in self.nodes if n.kind == kind]

    def to_plain(self) -> dict:
        return {
            "seed": self.seed,
            "bounds": {"min": list(self.bounds[0]), "max": list(self.bounds[1])},
            "node_count": len(self.nodes),
            "nodes": [n.to_plain() for n in self.nodes],
        }

    def content_hash(self) -> str:
        return sha256_hex(canonical_json_bytes(self.to_plain()))


def _tv(kind: str, value) -> TypedValue:
    return TypedValue(kind=kind, value=value)


def _values(binding) -> dict:
    return {name: tv.value for name, tv in binding.values}


@dataclass
class _WaterSquare:
    level: float
    half_side: float

    def rejects(self, x: float, y: float, ground_z: float) -> bool:
        inside = abs(x) <= self.half_side and abs(y) <= self.half_side
        return inside and ground_z < self.level


def _place_instances(count: int, rng: CounterRng, field: TerrainField,
                     water: _WaterSquare | None):
    """Draw (position, scale, yaw) per instance, redrawing spots that land
    underwater; an instance that cannot find dry ground is skipped."""
    placements = []
    half = field.size / 2.0
    for _ in range(count):
        spot = None
        for _ in range(MAX_PLACEMENT_REDRAWS + 1):
            x = rng.uniform(-half, half)
            y = rng.uniform(-half, half)
            z = field.height(x, y)
            if water is None or not water.rejects(x, y, z):
                spot = (x, y, z)
                break
        if spot is None:
            continue
        scale = 1.0 + SCALE_JITTER * (rng.unit() * 2.0 - 1.0)
        yaw = 360.0 * rng.unit()
        placements.append((spot, scale, yaw))
    return placements


_BUILDER_NAMES = frozenset({
    "set_terrain", "add_trees", "add_flowers", "set_sky_nishita",
    "add_snow_layer", "set_fog", "add_water", "set_camera",
})


def build_scene(program: SceneProgram) -> SceneGraph:
    """Execute a program into a SceneGraph. Functions without builders are
    an error: the engine covers exactly the built-in catalog. Scatter
    functions need terrain to land on and produce nothing without it."""
    values: dict[str, dict] = {}
    for call in program.calls:
        name = call.binding.function
        if name not in _BUILDER_NAMES:
            raise EngineError(f"no builder for function {name!r}")
        values[name] = _values(call.binding)

    streams = {name: i for i, name in enumerate(program.catalog)}
    nodes: list[SceneNode] = []

    field: TerrainField | None = None
    terrain = values.get("set_terrain")
    if terrain is not None:
        field = TerrainField(program.seed, streams["set_terrain"], terrain["size"], terrain["roughness"])

    water = values.get("add_water")
    water_square = None
    if water is not None and field is not None:
        half_side = field.size * math.sqrt(water["area_fraction"]) / 2.0
        water_square = _WaterSquare(level=water["level"], half_side=half_side)

    snow = values.get("add_snow_layer")
    coverage = snow["coverage"] if snow is not None else 0.0

    if terrain is not None:
        nodes.append(SceneNode(
            id="terrain", kind="terrain", source="set_terrain", transform=Transform(),
            geometry=Geometry("heightfield", (
                ("size", terrain["size"]),
                ("roughness", terrain["roughness"]),
                ("grid", TERRAIN_GRID),
                ("stream", streams["set_terrain"]),
            )),
            attributes=(("base_color", _tv("color", terrain["base_color"])),),
        ))

    trees = values.get("add_trees")
    if trees is not None and field is not None:
        count = instance_count(trees["density"], field.size)
        rng = CounterRng(program.seed, streams["add_trees"])
        leaf_color = lerp_color(trees["leaf_color"], SNOW_WHITE, coverage)
        for i, (spot, scale, yaw) in enumerate(_place_instances(count, rng, field, water_square)):
            nodes.append(SceneNode(
                id=f"tree_{i:05d}", kind="tree", source="add_trees",
                transform=Transform(position=spot, scale=scale, yaw=yaw),
                geometry=Geometry("tree", (
                    ("trunk_height", trees["trunk_height"]),
                    ("canopy_ratio", trees["canopy_ratio"]),
                    ("leaf_type", trees["leaf_type"]),
                )),
                attributes=(("leaf_color", _tv("color", leaf_color)),),
            ))

    flowers = values.get("add_flowers")
    if flowers is not None and field is not None:
        count = instance_count(flowers["density"], field.size)
        rng = CounterRng(program.seed, streams["add_flowers"])
        petal_color = lerp_color(flowers["petal_color"], SNOW_WHITE, coverage)
        for i, (spot, scale, yaw) in enumerate(_place_instances(count, rng, field, water_square)):
            nodes.append(SceneNode(
                id=f"flower_{i:05d}", kind="flower", source="add_flowers",
                transform=Transform(position=spot, scale=scale, yaw=yaw),
                geometry=Geometry("flower", (
                    ("petal_count", flowers["petal_count"]),
                    ("petal_length", flowers["petal_length"]),
                    ("petal_curl", flowers["petal_curl"]),
                    ("center_radius", flowers["center_radius"]),
                )),
                attributes=(
                    ("petal_color", _tv("color", petal_color)),
                    ("center_color", _tv("color", flowers["center_color"])),
                ),
            ))

    sky = values.get("set_sky_nishita")
    if sky is not None:
        direction = sun_direction(sky["sun_elevation"], sky["sun_rotation"])
        nodes.append(SceneNode(
            id="sky", kind="sky", source="set_sky_nishita", transform=Transform(), geometry=None,
            attributes=tuple(
                (name, _tv("float", sky[name]))
                for name in ("sun_elevation", "sun_rotation", "altitude",
                             "air_density", "dust_density", "ozone_density")
            ) + (("sun_direction", _tv("vec3", direction)),),
        ))

    if snow is not None and terrain is not None:
        snow_color = lerp_color(terrain["base_color"], SNOW_WHITE, coverage)
        nodes.append(SceneNode(
            id="snow", kind="snow", source="add_snow_layer",
            transform=Transform(position=(0.0, 0.0, snow["depth"])),
            geometry=Geometry("heightfield", (
                ("size", terrain["size"]),
                ("roughness", terrain["roughness"]),
                ("grid", TERRAIN_GRID),
                ("stream", streams["set_terrain"]),
            )),
            attributes=(
                ("coverage", _tv("float", coverage)),
                ("depth", _tv("float", snow["depth"])),
                ("snow_color", _tv("color", snow_color)),
            ),
        ))

    fog = values.get("set_fog")
    if fog is not None:
        nodes.append(SceneNode(
            id="fog", kind="fog", source="set_fog", transform=Transform(), geometry=None,
            attributes=(
                ("density", _tv("float", fog["density"])),
                ("fog_color", _tv("color", fog["fog_color"])),
            ),
        ))

    if water is not None and field is not None:
        side = field.size * math.sqrt(water["area_fraction"])
        nodes.append(SceneNode(
            id="water", kind="water", source="add_water",
            transform=Transform(position=(0.0, 0.0, water["level"])),
            geometry=Geometry("plane", (("side", side),)),
            attributes=(("area_fraction", _tv("float", water["area_fraction"])),),
        ))

    camera = values.get("set_camera")
    if camera is not None:
        nodes.append(SceneNode(
            id="camera", kind="camera", source="set_camera",
            transform=Transform(position=camera["position"]),
            geometry=None,
            attributes=(
                ("position", _tv("vec3", camera["position"])),
                ("look_at", _tv("vec3", camera["look_at"])),
            ),
        ))

    bounds = _scene_bounds(nodes, field, program.seed, streams)
    return SceneGraph(nodes=tuple(nodes), bounds=bounds, seed=program.seed)


def _scene_bounds(nodes, field, seed, streams):
    from .export import realize_node

    lo = [math.inf] * 3
    hi = [-math.inf] * 3
    seen = False
    for node in nodes:
        if node.geometry is None:
            continue
        mesh = realize_node(node, field)
        for v in mesh.vertices:
            seen = True
            for k in range(3):
                lo[k] = min(lo[k], v[k])
                hi[k] = max(hi[k], v[k])
    if not seen:
        return ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    return (tuple(lo), tuple(hi))
