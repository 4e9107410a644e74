"""Deterministic scene synthesis: counter RNG, scene graphs, mesh export."""

from .engine import (
    EngineError,
    Geometry,
    SceneGraph,
    SceneNode,
    TerrainField,
    Transform,
    build_scene,
    instance_count,
    lerp_color,
    round_half_up,
    sun_direction,
)
from .export import (
    export_obj,
    export_scene_json,
    realize_node,
    terrain_field_from,
    verify_scene_json,
)
from .rng import CounterRng, draw_u64, draw_unit, splitmix64

__all__ = [
    "EngineError",
    "Geometry",
    "SceneGraph",
    "SceneNode",
    "TerrainField",
    "Transform",
    "build_scene",
    "instance_count",
    "lerp_color",
    "round_half_up",
    "sun_direction",
    "export_obj",
    "export_scene_json",
    "realize_node",
    "terrain_field_from",
    "verify_scene_json",
    "CounterRng",
    "draw_u64",
    "draw_unit",
    "splitmix64",
]
