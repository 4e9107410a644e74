"""Metrics: binning, entropy, failure rate, alignment, ablation driver."""

from __future__ import annotations

import math
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenestudio.agents import VARIANT_TOGGLES
from scenestudio.callspec import TypedValue
from scenestudio.codegen import empty_program
from scenestudio.gateway import Gateway
from scenestudio.hashing import stable_u64
from scenestudio.metrics import (
    AblationReport,
    DiversityObservation,
    MetricsError,
    alignment_proxy,
    bin_value,
    eval_protocol,
    failure_rate,
    modeling_call_count,
    observations_from_program,
    report_table,
    run_ablation,
    scene_seed,
    shannon_diversity,
)
from scenestudio.mockllm import HeuristicResponder, MockBackend
from scenestudio.registry import ParamSchema


def _tv(kind, value):
    return TypedValue(kind=kind, value=value)


# ---------------------------------------------------------------------------
# binning
# ---------------------------------------------------------------------------


def test_float_bin_boundaries_over_declared_range(registry):
    schema = registry.get("set_terrain").param("size")  # range [10, 1000]
    lo, hi = schema.range
    assert bin_value(schema, _tv("float", lo)) == 0
    assert bin_value(schema, _tv("float", hi)) == 99
    assert bin_value(schema, _tv("float", (lo + hi) / 2.0)) == 50


@given(st.floats(10.0, 1000.0))
def test_float_bins_stay_in_range(registry, v):
    schema = registry.get("set_terrain").param("size")
    assert 0 <= bin_value(schema, _tv("float", v)) <= 99


def test_int_enum_bool_are_their_own_category(registry):
    petals = registry.get("add_flowers").param("petal_count")
    assert bin_value(petals, _tv("int", 7)) == 7
    leaf = registry.get("add_trees").param("leaf_type")
    assert bin_value(leaf, _tv("enum", "pine")) == "pine"
    flag = ParamSchema(name="on", kind="bool")
    assert bin_value(flag, _tv("bool", True)) is True


def test_color_bins_per_component_over_unit_range(registry):
    schema = registry.get("add_flowers").param("petal_color")
    assert bin_value(schema, _tv("color", (0.0, 0.5, 1.0))) == (0, 50, 99)


def test_vec3_bins_over_declared_range(registry):
    schema = registry.get("set_camera").param("position")
    lo, hi = schema.range
    mid = (lo + hi) / 2.0
    assert bin_value(schema, _tv("vec3", (lo, mid, hi))) == (0, 50, 99)


def test_unbinnable_values_raise():
    with pytest.raises(MetricsError):
        bin_value(ParamSchema(name="x", kind="float"), _tv("float", 1.0))
    with pytest.raises(MetricsError):
        bin_value(ParamSchema(name="x", kind="vec3"), _tv("vec3", (0.0, 0.0, 0.0)))
    with pytest.raises(MetricsError):
        bin_value(ParamSchema(name="x", kind="text"), _tv("text", "hi"))


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("k", [2, 10, 100])
def test_uniform_categories_measure_ln_k(k):
    observations = [("f", "p", i) for i in range(k)]
    assert abs(shannon_diversity(observations) - math.log(k)) < 1e-12


def test_no_observations_measure_zero():
    assert shannon_diversity([]) == 0.0


def test_single_category_measures_zero():
    assert shannon_diversity([("f", "p", 3)] * 17) == 0.0


@given(st.lists(st.integers(0, 5), min_size=1, max_size=200))
def test_entropy_matches_direct_summation(categories):
    observations = [("f", "p", c) for c in categories]
    n = len(categories)
    counts = {c: categories.count(c) for c in set(categories)}
    expected = -sum((c / n) * math.log(c / n) for c in counts.values())
    assert abs(shannon_diversity(observations) - expected) < 1e-9


@given(st.lists(st.integers(0, 30), min_size=1, max_size=300))
def test_entropy_bounds_and_permutation_invariance(categories):
    observations = [("f", "p", c) for c in categories]
    h = shannon_diversity(observations)
    assert -1e-12 <= h <= math.log(len(set(categories))) + 1e-12
    # summation order differs after the permutation, so allow float slack
    assert shannon_diversity(list(reversed(observations))) == pytest.approx(h, abs=1e-12)


def test_observation_objects_and_tuples_agree():
    tuples = [("add_trees", "density", 3), ("add_trees", "density", 5)]
    objects = [DiversityObservation(f, p, c) for f, p, c in tuples]
    assert shannon_diversity(objects) == shannon_diversity(tuples)
    assert objects[0].key() == tuples[0]


def test_observations_skip_defaulted_parameters(registry):
    from scenestudio.agents import DispatchPlan, SceneDelta
    from scenestudio.callspec import scan_calls
    from scenestudio.codegen import apply_delta
    from scenestudio.registry import validate_binding

    (call,) = scan_calls("set_terrain(size=200.0)")
    binding, issues = validate_binding(registry.get("set_terrain"), call)
    assert issues == []
    assert binding.defaulted == frozenset({"roughness", "base_color"})
    delta = SceneDelta(0, DispatchPlan(0, ("set_terrain",), "t"), (), (binding,), ())
    program = apply_delta(empty_program(registry, seed=7), delta)
    observations = observations_from_program(program, registry)
    assert [(o.function, o.param) for o in observations] == [("set_terrain", "size")]


def test_observations_reject_foreign_programs(registry, strict_registry):
    program = empty_program(strict_registry, seed=1)
    from scenestudio.callspec import scan_calls
    from scenestudio.registry import validate_binding
    from scenestudio.agents import DispatchPlan, SceneDelta
    from scenestudio.codegen import apply_delta

    (call,) = scan_calls('place_rock(size=1.0, style="round")')
    binding, _ = validate_binding(strict_registry.get("place_rock"), call)
    delta = SceneDelta(0, DispatchPlan(0, ("place_rock",), "t"), (), (binding,), ())
    program = apply_delta(program, delta)
    with pytest.raises(MetricsError):
        observations_from_program(program, registry)


# ---------------------------------------------------------------------------
# failure rate
# ---------------------------------------------------------------------------


def _entry(scene, exchanges, failures):
    return {"scene": scene, "exchanges": exchanges, "failures": failures}


def _model_exchange(function, idx, attempt):
    return {"tag": f"model/{function}/{idx}", "attempt": attempt}


def _failure(function, idx, attempt, stage="modeling"):
    return {"stage": stage, "instruction_index": idx, "function": function,
            "attempt": attempt, "kind": "range-error", "detail": "x"}


def test_failure_rate_counts_only_final_attempt_failures():
    transcripts = [_entry("s", [
        _model_exchange("add_trees", 0, 1),
        _model_exchange("add_trees", 0, 2),  # retry recovered
        _model_exchange("set_fog", 0, 1),
    ], [_failure("add_trees", 0, 1)])]
    assert failure_rate(transcripts) == 0.0
    assert modeling_call_count(transcripts) == 2


def test_failure_rate_flags_exhausted_tasks():
    transcripts = [_entry("s", [
        _model_exchange("add_trees", 0, 1),
        _model_exchange("add_trees", 0, 2),
        _model_exchange("set_fog", 0, 1),
    ], [_failure("add_trees", 0, 1), _failure("add_trees", 0, 2)])]
    assert failure_rate(transcripts) == 0.5


def test_failure_rate_sees_tasks_with_no_exchange_record():
    # a task can fail before any exchange is logged (e.g. cassette miss)
    transcripts = [_entry("s", [_model_exchange("set_fog", 0, 1)],
                          [_failure("add_trees", 0, 1)])]
    assert failure_rate(transcripts) == 0.5


def test_failure_rate_separates_equal_indices_across_scenes():
    transcripts = [
        _entry("a", [_model_exchange("set_fog", 0, 1)], []),
        _entry("b", [_model_exchange("set_fog", 0, 1)],
               [_failure("set_fog", 0, 1)]),
    ]
    assert modeling_call_count(transcripts) == 2
    assert failure_rate(transcripts) == 0.5


def test_failure_rate_ignores_other_stages():
    transcripts = [_entry("s", [_model_exchange("set_fog", 0, 1)],
                          [_failure("set_fog", 0, 1, stage="dispatch")])]
    assert failure_rate(transcripts) == 0.0


def test_failure_rate_undefined_without_modeling_activity():
    with pytest.raises(MetricsError):
        failure_rate([_entry("s", [{"tag": "dispatch/0", "attempt": 1}], [])])


# ---------------------------------------------------------------------------
# alignment proxy
# ---------------------------------------------------------------------------


def _doc(*nodes):
    return {"nodes": list(nodes)}


def test_alignment_full_hit():
    doc = _doc({
        "source": "add_trees", "kind": "tree",
        "geometry": {"params": {"leaf_type": "pine"}},
        "attributes": {},
    })
    assert alignment_proxy("pine trees", doc) == 1.0


def test_alignment_counts_color_names():
    doc = _doc({
        "source": "add_flowers", "kind": "flower", "geometry": None,
        "attributes": {"petal_color": {"kind": "color", "value": [1.0, 0.9, 0.1]}},
    })
    assert alignment_proxy("yellow flowers", doc) == 1.0
    assert alignment_proxy("purple boulders", doc) == 0.0


def test_alignment_is_a_fraction_of_content_tokens():
    doc = _doc({"source": "set_fog", "kind": "fog", "geometry": None, "attributes": {}})
    # "the" and "a" are stopwords; fog hits, dragon misses
    assert alignment_proxy("the fog and a dragon", doc) == 0.5


def test_alignment_empty_instruction_is_zero():
    assert alignment_proxy("the of and", _doc()) == 0.0


def test_alignment_strips_plurals():
    doc = _doc({"source": "add_trees", "kind": "tree", "geometry": None, "attributes": {}})
    assert alignment_proxy("tree", doc) == 1.0  # "trees" from the source name
    assert alignment_proxy("trees", doc) == 1.0


# ---------------------------------------------------------------------------
# ablation driver
# ---------------------------------------------------------------------------


def test_eval_protocol_takes_first_two_nonempty_lines():
    lines = ["", "  a meadow  ", "", "add fog", "ignored third"]
    instructions = eval_protocol(lines)
    assert [i.text for i in instructions] == ["a meadow", "add fog"]
    assert [i.index for i in instructions] == [0, 1]
    assert instructions[0].kind == "initial"


def test_eval_protocol_requires_two_instructions():
    with pytest.raises(MetricsError):
        eval_protocol(["only one"])


def test_scene_seed_is_stable_and_name_sensitive():
    assert scene_seed(0, "meadow") == stable_u64("eval|0|meadow")
    assert scene_seed(0, "meadow") != scene_seed(0, "lake")
    assert scene_seed(0, "meadow") != scene_seed(1, "meadow")


def test_unknown_variant_is_rejected(registry):
    with pytest.raises(MetricsError):
        run_ablation([("s", ["a", "b"])], ["bogus"], lambda n, v: None, registry)


def test_run_ablation_report_shape(registry):
    corpus = [
        ("meadow", ["a meadow with white flowers", "add fog"]),
        ("grove", ["a pine grove", "make the trees taller"]),
    ]

    def factory(name, variant):
        return Gateway(MockBackend(HeuristicResponder(registry)))

    reports = run_ablation(corpus, ["full", "no_TDA"], factory, registry, base_seed=3)
    assert [r.variant for r in reports] == ["full", "no_TDA"]
    full, no_tda = reports
    assert full.scene_count == no_tda.scene_count == 2
    # skipping dispatch models the whole catalog for every instruction
    assert no_tda.call_count == 2 * 2 * len(registry.names())
    assert 0 < full.call_count < no_tda.call_count
    assert 0.0 <= full.alignment <= 1.0
    assert full.failure_rate == 0.0
    assert full.diversity > 0.0


def test_run_ablation_is_deterministic(registry):
    corpus = [("meadow", ["a meadow with white flowers", "add fog"])]

    def factory(name, variant):
        return Gateway(MockBackend(HeuristicResponder(registry)))

    a = run_ablation(corpus, ["full"], factory, registry, base_seed=3)
    b = run_ablation(corpus, ["full"], factory, registry, base_seed=3)
    assert [r.to_plain() for r in a] == [r.to_plain() for r in b]


def test_variant_names_match_toggle_table():
    assert set(VARIANT_TOGGLES) == {"full", "no_CA", "no_TDA"}


def test_report_table_layout():
    reports = [AblationReport("full", 0.25, 0.0, 1.5, 4, 42)]
    text = report_table(reports)
    lines = text.splitlines()
    assert lines[0].split() == ["variant", "alignment", "fail_rate", "diversity", "scenes", "calls"]
    assert set(lines[1]) == {"-"}
    assert lines[2].split() == ["full", "0.250", "0.000", "1.500", "4", "42"]
    assert text.endswith("\n")
