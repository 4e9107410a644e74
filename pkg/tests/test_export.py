"""Scene document and OBJ export: determinism, hashes, mesh realization."""

from __future__ import annotations

import json

import pytest

from scenestudio.agents import DispatchPlan, SceneDelta
from scenestudio.callspec import scan_calls
from scenestudio.codegen import apply_delta, empty_program
from scenestudio.procgen import (
    build_scene,
    export_obj,
    export_scene_json,
    realize_node,
    terrain_field_from,
    verify_scene_json,
)
from scenestudio.procgen.engine import Geometry, SceneNode, Transform
from scenestudio.procgen.mesh import tree_mesh
from scenestudio.registry import validate_binding


def _graph(registry, seed, *call_texts):
    bindings = []
    for text in call_texts:
        (call,) = scan_calls(text)
        binding, issues = validate_binding(registry.get(call.function), call)
        assert issues == [], issues
        bindings.append(binding)
    order = {n: i for i, n in enumerate(registry.names())}
    bindings.sort(key=lambda b: order[b.function])
    delta = SceneDelta(
        instruction_index=0,
        plan=DispatchPlan(0, tuple(b.function for b in bindings), "test"),
        enrichments=(), bindings=tuple(bindings), failures=(),
    )
    return build_scene(apply_delta(empty_program(registry, seed=seed), delta))


@pytest.fixture(scope="module")
def graph(registry):
    return _graph(
        registry, 42,
        "set_terrain(size=60.0, roughness=0.4)",
        "add_trees(density=0.003, leaf_type=\"pine\")",
        "add_flowers(density=0.005, petal_count=6)",
        "set_sky_nishita()",
        "add_water(level=-1.0, area_fraction=0.16)",
        "set_camera()",
    )


# ---------------------------------------------------------------------------
# scene document
# ---------------------------------------------------------------------------


def test_scene_json_verifies_and_is_deterministic(graph):
    text = export_scene_json(graph)
    assert verify_scene_json(text)
    assert export_scene_json(graph) == text
    doc = json.loads(text)
    assert doc["format"] == 1
    assert doc["seed"] == 42
    assert doc["node_count"] == len(doc["nodes"])


def test_scene_json_tamper_is_detected(graph):
    doc = json.loads(export_scene_json(graph))
    doc["seed"] = 43
    assert not verify_scene_json(json.dumps(doc))


def test_scene_json_hash_field_is_excluded_from_its_own_hash(graph):
    doc = json.loads(export_scene_json(graph))
    claimed = doc.pop("content_hash")
    assert claimed != ""
    doc["content_hash"] = ""
    from scenestudio.hashing import canonical_json_bytes, sha256_hex

    assert claimed == sha256_hex(canonical_json_bytes(doc))


def test_scene_json_is_sorted_and_newline_terminated(graph):
    text = export_scene_json(graph)
    assert text.endswith("\n")
    top_keys = list(json.loads(text))
    assert top_keys == sorted(top_keys)


# ---------------------------------------------------------------------------
# terrain field reconstruction
# ---------------------------------------------------------------------------


def test_terrain_field_from_rebuilds_the_height_function(graph):
    field = terrain_field_from(graph)
    assert field is not None
    terrain = graph.node("terrain")
    for x, y, z in [v for v in realize_node(terrain, field).vertices][:5]:
        assert z == field.height(x, y)
    for node in graph.nodes_of_kind("tree"):
        x, y, z = node.transform.position
        assert z == field.height(x, y)


def test_terrain_field_from_without_terrain_is_none(registry):
    graph = _graph(registry, 1, "set_fog()")
    assert terrain_field_from(graph) is None


# ---------------------------------------------------------------------------
# mesh realization
# ---------------------------------------------------------------------------


def test_realize_identity_transform_returns_canonical_mesh():
    node = SceneNode(
        id="tree_00000", kind="tree", source="add_trees", transform=Transform(),
        geometry=Geometry("tree", (
            ("trunk_height", 6.0), ("canopy_ratio", 1.2), ("leaf_type", "pine"))),
        attributes=(),
    )
    mesh = realize_node(node, None)
    assert mesh == tree_mesh(6.0, 1.2, "pine")


def test_realize_applies_scale_yaw_and_offset():
    t = Transform(position=(10.0, -4.0, 2.0), scale=2.0, yaw=90.0)
    node = SceneNode(
        id="tree_00000", kind="tree", source="add_trees", transform=t,
        geometry=Geometry("tree", (
            ("trunk_height", 6.0), ("canopy_ratio", 1.2), ("leaf_type", "pine"))),
        attributes=(),
    )
    mesh = realize_node(node, None)
    base = tree_mesh(6.0, 1.2, "pine")
    assert mesh.faces == base.faces
    # apex (0, 0, 6) -> scaled (0, 0, 12) -> rotated unchanged -> offset
    apex = mesh.vertices[8]
    assert apex == pytest.approx((10.0, -4.0, 14.0))
    # ring vertex (r, 0, 0) rotates onto +y under a 90 degree yaw
    rx, ry, _ = base.vertices[0]
    wx, wy, _ = mesh.vertices[0]
    assert (wx, wy) == pytest.approx((10.0 - 2.0 * ry, -4.0 + 2.0 * rx))


def test_realize_without_geometry_is_an_error(graph):
    camera = graph.node("camera")
    with pytest.raises(ValueError):
        realize_node(camera, None)


def test_realize_heightfield_needs_a_field(graph):
    terrain = graph.node("terrain")
    with pytest.raises(ValueError):
        realize_node(terrain, None)


# ---------------------------------------------------------------------------
# OBJ export
# ---------------------------------------------------------------------------


def test_obj_header_and_object_blocks(graph):
    text = export_obj(graph)
    lines = text.splitlines()
    assert lines[0] == "# scenestudio scene export"
    assert lines[1] == f"# scene: {graph.content_hash()}"
    assert lines[2] == "# seed: 42"
    names = [line[2:] for line in lines if line.startswith("o ")]
    geometry_ids = [n.id for n in graph.nodes if n.geometry is not None]
    assert names == geometry_ids
    assert "o camera" not in text and "o sky" not in text


def test_obj_counts_and_global_one_based_indices(graph):
    lines = export_obj(graph).splitlines()
    v_count = sum(1 for line in lines if line.startswith("v "))
    expected_v = sum(
        n.geometry.counts()[0] for n in graph.nodes if n.geometry is not None)
    expected_f = sum(
        n.geometry.counts()[1] for n in graph.nodes if n.geometry is not None)
    f_lines = [line for line in lines if line.startswith("f ")]
    assert v_count == expected_v
    assert len(f_lines) == expected_f
    indices = [int(tok) for line in f_lines for tok in line.split()[1:]]
    assert min(indices) == 1
    assert max(indices) == v_count


def test_obj_faces_stay_within_their_object(graph):
    lines = export_obj(graph).splitlines()
    starts = {}  # object name -> first vertex index (1-based)
    counts = {}
    current = None
    seen = 0
    for line in lines:
        if line.startswith("o "):
            current = line[2:]
            starts[current] = seen + 1
            counts[current] = 0
        elif line.startswith("v "):
            seen += 1
            counts[current] += 1
    current = None
    for line in lines:
        if line.startswith("o "):
            current = line[2:]
        elif line.startswith("f "):
            lo, hi = starts[current], starts[current] + counts[current] - 1
            assert all(lo <= int(tok) <= hi for tok in line.split()[1:])


def test_obj_vertices_use_fixed_precision(graph):
    for line in export_obj(graph).splitlines():
        if line.startswith("v "):
            parts = line.split()
            assert len(parts) == 4
            for p in parts[1:]:
                whole, frac = p.lstrip("-").split(".")
                assert len(frac) == 6
            break


def test_obj_is_deterministic(graph):
    assert export_obj(graph) == export_obj(graph)
    assert export_obj(graph).endswith("\n")
