"""Heuristic offline responder: every reply must parse under the grammars."""

from __future__ import annotations

import pytest

from scenestudio.agents import classify_model_response
from scenestudio.callspec import parse_dispatch, parse_enrichment
from scenestudio.mockllm import HeuristicResponder, mock_gateway
from scenestudio.prompts import (
    build_conceptualization_request,
    build_dispatch_request,
    build_modeling_request,
)


@pytest.fixture()
def responder(registry):
    return HeuristicResponder(registry)


def test_dispatch_replies_parse_and_match_keywords(registry, responder):
    req = build_dispatch_request(registry, "Plant maple trees beside the lake", [], 1)
    selected, issues = parse_dispatch(responder(req, 1), registry)
    assert issues == []
    assert selected == ["add_trees", "add_water"]


def test_dispatch_winter_special_case_exercises_alias(registry, responder):
    req = build_dispatch_request(registry, "translate the scene into a winter setting", [], 1)
    text = responder(req, 1)
    assert "update_trees" in text
    selected, issues = parse_dispatch(text, registry)
    assert issues == []
    assert set(selected) == {"add_snow_layer", "add_trees"}


def test_dispatch_without_keywords_is_empty_plan(registry, responder):
    req = build_dispatch_request(registry, "make it nicer somehow", [], 1)
    selected, issues = parse_dispatch(responder(req, 1), registry)
    assert selected == []
    assert issues == []


def test_conceptualize_answers_every_requirement(registry, responder):
    for spec in registry:
        req = build_conceptualization_request(spec, "a calm meadow at dawn", 0)
        answers, positional, issues = parse_enrichment(responder(req, 1), spec.info_requirements)
        assert issues == []
        assert not positional
        assert [a for a, _ in answers] == list(spec.info_requirements)


def test_model_replies_bind_with_no_defaults(registry, responder):
    for spec in registry:
        req = build_modeling_request(spec, "a calm meadow at dawn", 0)
        binding, issue = classify_model_response(responder(req, 1), spec, registry)
        assert issue is None, f"{spec.name}: {issue}"
        assert binding.function == spec.name
        assert binding.defaulted == frozenset(), f"{spec.name} left parameters defaulted"


def test_model_color_follows_last_color_word(registry, responder):
    spec = registry.get("add_flowers")
    req = build_modeling_request(spec, "flower color: vivid red blooms", 0)
    binding, _ = classify_model_response(responder(req, 1), spec, registry)
    assert binding.value("petal_color").value == (0.85, 0.1, 0.1)


def test_model_enum_follows_description_token(registry, responder):
    spec = registry.get("add_trees")
    req = build_modeling_request(spec, "a stand of birch trees", 0)
    binding, _ = classify_model_response(responder(req, 1), spec, registry)
    assert binding.value("leaf_type").value == "birch"


def test_model_values_respect_schema_ranges(registry, responder):
    for spec in registry:
        req = build_modeling_request(spec, "dense golden dunes under a high sun", 0)
        binding, issue = classify_model_response(responder(req, 1), spec, registry)
        assert issue is None
        for p in spec.params:
            if p.range is not None and p.kind in ("float", "int"):
                lo, hi = p.range
                assert lo <= binding.value(p.name).value <= hi


def test_responder_is_deterministic(registry, responder):
    req = build_modeling_request(registry.get("set_terrain"), "rolling green hills", 0)
    assert responder(req, 1) == responder(req, 1)
    assert responder(req, 1) == HeuristicResponder(registry)(req, 1)


def test_responder_rejects_foreign_tags(registry, responder):
    from scenestudio.gateway import ChatRequest

    with pytest.raises(ValueError):
        responder(ChatRequest(system="s", user="u", tag="other/things"), 1)


def test_mock_gateway_scripted_overrides_win(registry):
    gateway = mock_gateway(registry, scripted={"dispatch/1": "FUNCTIONS: [set_fog]"})
    from scenestudio.gateway import ChatRequest

    response = gateway.complete(ChatRequest(system="s", user="u", tag="dispatch/1"))
    assert response.text == "FUNCTIONS: [set_fog]"
