"""Realize scene nodes into meshes and export scenes as documents.

Two export surfaces: a JSON scene document carrying its own content hash,
and a wavefront-style OBJ with one object per geometry node. Both are byte
deterministic for a given scene graph.
"""

from __future__ import annotations

import json

from ..hashing import canonical_json_bytes, sha256_hex
from .engine import SceneGraph, SceneNode, TerrainField
from .mesh import Mesh, flower_mesh, heightfield_mesh, plane_mesh, tree_mesh

SCENE_FORMAT_VERSION = 1


def terrain_field_from(graph: SceneGraph) -> TerrainField | None:
    """Rebuild the height function from the terrain node's descriptor."""
    node = graph.node("terrain")
    if node is None or node.geometry is None:
        return None
    g = node.geometry
    return TerrainField(graph.seed, int(g.param("stream")), g.param("size"), g.param("roughness"))


def realize_node(node: SceneNode, field: TerrainField | None) -> Mesh:
    """Build the node's world-space mesh: canonical geometry from the
    descriptor, then the node transform."""
    g = node.geometry
    if g is None:
        raise ValueError(f"node {node.id} has no geometry to realize")
    if g.shape == "heightfield":
        if field is None:
            raise ValueError(f"node {node.id} needs a terrain field")
        mesh = heightfield_mesh(g.param("size"), field.height)
    elif g.shape == "tree":
        mesh = tree_mesh(g.param("trunk_height"), g.param("canopy_ratio"), g.param("leaf_type"))
    elif g.shape == "flower":
        mesh = flower_mesh(int(g.param("petal_count")), g.param("petal_length"),
                           g.param("petal_curl"), g.param("center_radius"))
    elif g.shape == "plane":
        mesh = plane_mesh(g.param("side"), 0.0)
    else:
        raise ValueError(f"unknown geometry shape {g.shape!r}")
    t = node.transform
    if t.position == (0.0, 0.0, 0.0) and t.scale == 1.0 and t.yaw == 0.0:
        return mesh
    return Mesh(tuple(t.apply(v) for v in mesh.vertices), mesh.faces)


def export_scene_json(graph: SceneGraph) -> str:
    """Scene document: node list, bounds, seed, and a content_hash field
    computed over the document itself (with the hash field blank)."""
    doc = {"format": SCENE_FORMAT_VERSION, "content_hash": ""}
    doc.update(graph.to_plain())
    doc["content_hash"] = sha256_hex(canonical_json_bytes(doc))
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def verify_scene_json(text: str) -> bool:
    """Recompute the embedded content hash; True when it matches."""
    doc = json.loads(text)
    claimed = doc.get("content_hash")
    doc["content_hash"] = ""
    return claimed == sha256_hex(canonical_json_bytes(doc))


def export_obj(graph: SceneGraph) -> str:
    """Wavefront-style text: header comments, then one `o` block per
    geometry node with globally numbered 1-based faces."""
    field = terrain_field_from(graph)
    lines = [
        "# scenestudio scene export",
        f"# scene: {graph.content_hash()}",
        f"# seed: {graph.seed}",
    ]
    offset = 0
    for node in graph.nodes:
        if node.geometry is None:
            continue
        mesh = realize_node(node, field)
        lines.append(f"o {node.id}")
        for x, y, z in mesh.vertices:
            lines.append(f"v {x:.6f} {y:.6f} {z:.6f}")
        for face in mesh.faces:
            lines.append("f " + " ".join(str(i + 1 + offset) for i in face))
        offset += len(mesh.vertices)
    return "\n".join(lines) + "\n"
