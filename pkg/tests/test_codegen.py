"""Scene programs: validation, delta folding, script emission, diffs."""

from __future__ import annotations

import pytest

from scenestudio import __version__
from scenestudio.agents import DispatchPlan, SceneDelta, Toggles, make_instruction, run_pipeline
from scenestudio.callspec import scan_calls
from scenestudio.codegen import (
    ProgramCall,
    SceneProgram,
    apply_delta,
    diff_programs,
    emit_blender_script,
    empty_program,
    program_from_yaml,
    program_to_yaml,
)
from scenestudio.registry import validate_binding


def _binding(registry, text):
    (call,) = scan_calls(text)
    spec = registry.get(call.function)
    binding, issues = validate_binding(spec, call)
    assert issues == []
    return binding


def _delta(registry, index, *call_texts):
    bindings = tuple(_binding(registry, t) for t in call_texts)
    return SceneDelta(
        instruction_index=index,
        plan=DispatchPlan(index, tuple(b.function for b in bindings), "test"),
        enrichments=(),
        bindings=bindings,
        failures=(),
    )


@pytest.fixture()
def program(registry, gateway):
    base = empty_program(registry, seed=42)
    delta = run_pipeline(make_instruction(0, "a calm meadow at dawn"), [], registry, gateway, Toggles())
    return apply_delta(base, delta)


def test_empty_program_pins_catalog_and_version(registry):
    program = empty_program(registry, seed=7)
    assert program.calls == ()
    assert program.catalog == tuple(registry.names())
    assert program.registry_version == registry.version_hash()


def test_program_validation(registry):
    base = empty_program(registry, seed=1)
    call = ProgramCall(_binding(registry, "add_trees(density=0.001)"), provenance=0)
    with pytest.raises(ValueError, match="seed"):
        SceneProgram(calls=(), seed=2**64, catalog=base.catalog, registry_version="")
    with pytest.raises(ValueError, match="one call"):
        SceneProgram(calls=(call, call), seed=1, catalog=base.catalog, registry_version="")
    terrain = ProgramCall(_binding(registry, "set_terrain(size=50.0)"), provenance=0)
    with pytest.raises(ValueError, match="catalog order"):
        SceneProgram(calls=(call, terrain), seed=1, catalog=base.catalog, registry_version="")
    with pytest.raises(ValueError, match="outside the catalog"):
        SceneProgram(calls=(call,), seed=1, catalog=("set_terrain",), registry_version="")


def test_apply_delta_replaces_only_carried_calls(registry):
    base = apply_delta(
        empty_program(registry, seed=3),
        _delta(registry, 0, "set_terrain(size=50.0)", "add_trees(density=0.002)", "set_fog(density=0.4)"),
    )
    after = apply_delta(base, _delta(registry, 1, "add_trees(density=0.005)"))
    # untouched calls survive as the same objects
    assert after.call_for("set_terrain") is base.call_for("set_terrain")
    assert after.call_for("set_fog") is base.call_for("set_fog")
    assert after.call_for("add_trees").binding.value("density").value == 0.005
    assert after.call_for("add_trees").provenance == 1
    assert after.function_names() == ("set_terrain", "add_trees", "set_fog")


def test_apply_delta_inserts_in_catalog_order(registry):
    base = apply_delta(empty_program(registry, seed=3), _delta(registry, 0, "set_fog(density=0.4)"))
    after = apply_delta(base, _delta(registry, 1, "set_terrain(size=20.0)"))
    assert after.function_names() == ("set_terrain", "set_fog")


def test_content_hash_tracks_values_not_identity(registry):
    a = apply_delta(empty_program(registry, seed=3), _delta(registry, 0, "set_fog(density=0.4)"))
    b = apply_delta(empty_program(registry, seed=3), _delta(registry, 0, "set_fog(density=0.4)"))
    c = apply_delta(empty_program(registry, seed=3), _delta(registry, 0, "set_fog(density=0.5)"))
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != c.content_hash()
    assert a.content_hash() != apply_delta(
        empty_program(registry, seed=4), _delta(registry, 0, "set_fog(density=0.4)")
    ).content_hash()


def test_program_yaml_roundtrip(program):
    text = program_to_yaml(program)
    again = program_from_yaml(text)
    assert again == program
    assert again.content_hash() == program.content_hash()
    assert program_to_yaml(again) == text


def test_program_yaml_rejects_other_documents():
    with pytest.raises(ValueError):
        program_from_yaml("format: 99\nprogram: {}\n")


# ---------------------------------------------------------------------------
# script emission
# ---------------------------------------------------------------------------


def test_script_structure(program):
    script = emit_blender_script(program)
    lines = script.splitlines()
    assert lines[0] == f"# scene script (scenestudio {__version__})"
    assert lines[1] == f"# program: {program.content_hash()}"
    assert lines[2] == "# seed: 42"
    assert lines[3] == ""
    assert lines[4] == "from scene_functions import ("
    imported = [ln.strip().rstrip(",") for ln in lines[5:5 + len(program.calls)]]
    assert imported == sorted(program.function_names())
    body = lines[5 + len(program.calls) + 2:]
    assert len(body) == len(program.calls)
    for line, call in zip(body, program.calls):
        assert line == call.binding.render()


def test_script_is_parseable_python(program):
    compile(emit_blender_script(program), "<script>", "exec")


def test_equal_programs_emit_equal_bytes(registry, gateway):
    from scenestudio.mockllm import mock_gateway

    base = empty_program(registry, seed=42)
    delta = run_pipeline(make_instruction(0, "a calm meadow at dawn"), [], registry,
                         mock_gateway(registry), Toggles())
    a = emit_blender_script(apply_delta(base, delta))
    delta2 = run_pipeline(make_instruction(0, "a calm meadow at dawn"), [], registry,
                          mock_gateway(registry), Toggles())
    b = emit_blender_script(apply_delta(base, delta2))
    assert a == b


def test_empty_program_script_has_no_import_stanza(registry):
    script = emit_blender_script(empty_program(registry, seed=0))
    assert "import" not in script
    assert script.endswith("\n")


# ---------------------------------------------------------------------------
# diffs
# ---------------------------------------------------------------------------


def test_diff_empty_iff_value_equal(registry):
    a = apply_delta(empty_program(registry, seed=1), _delta(registry, 0, "set_fog(density=0.4)"))
    b = apply_delta(empty_program(registry, seed=1), _delta(registry, 0, "set_fog(density=0.4)"))
    assert diff_programs(a, b).empty()
    c = apply_delta(b, _delta(registry, 1, "set_fog(density=0.4)"))  # same values, new provenance
    assert diff_programs(a, c).empty()


def test_diff_reports_added_removed_changed(registry):
    old = apply_delta(
        empty_program(registry, seed=1),
        _delta(registry, 0, "set_terrain(size=50.0)", "set_fog(density=0.4)"),
    )
    new = apply_delta(
        empty_program(registry, seed=1),
        _delta(registry, 0, "set_terrain(size=80.0)", "add_trees(density=0.002)"),
    )
    diff = diff_programs(old, new)
    assert diff.added == ("add_trees",)
    assert diff.removed == ("set_fog",)
    assert [(c.function, c.param) for c in diff.changed] == [("set_terrain", "size")]
    assert diff.changed[0].old.value == 50.0
    assert diff.changed[0].new.value == 80.0


def test_diff_summary_lines(registry):
    old = apply_delta(empty_program(registry, seed=1), _delta(registry, 0, "set_fog(density=0.4)"))
    new = apply_delta(old, _delta(registry, 1, "set_fog(density=0.7)"))
    lines = diff_programs(old, new).summary_lines()
    assert lines == ["~ set_fog.density: 0.4 -> 0.7"]
    assert diff_programs(old, old).summary_lines() == ["(no changes)"]


def test_diff_plain_is_json_compatible(registry):
    import json

    old = apply_delta(empty_program(registry, seed=1), _delta(registry, 0, "set_fog(density=0.4)"))
    new = apply_delta(old, _delta(registry, 1, "set_fog(density=0.4, fog_color=(0.9, 0.9, 0.95))"))
    doc = diff_programs(old, new).to_plain()
    json.dumps(doc)
    assert doc["changed"][0]["param"] == "fog_color"
    assert doc["changed"][0]["new"]["value"] == [0.9, 0.9, 0.95]
