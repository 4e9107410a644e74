"""Failure taxonomy over the malformed-response corpus.

Every corpus file is a raw model reply annotated with the failure class the
classifier must assign. The manifest is the oracle; the corpus covers all
six classes.
"""

from __future__ import annotations

import json

import pytest

from scenestudio.agents import classify_model_response
from scenestudio.callspec import FAILURE_KINDS

from conftest import FIXTURES

CORPUS = FIXTURES / "malformed"
MANIFEST = json.loads((CORPUS / "manifest.json").read_text(encoding="utf-8"))
CASES = MANIFEST["cases"]


def _spec(case, registry, strict_registry):
    source = strict_registry if case["registry"] == "strict" else registry
    spec = source.get(case["function"])
    assert spec is not None, f"{case['file']}: unknown function {case['function']}"
    return spec, source


def test_corpus_is_large_and_annotated():
    assert len(CASES) >= 30
    assert len({c["file"] for c in CASES}) == len(CASES)
    for case in CASES:
        assert (CORPUS / case["file"]).is_file(), case["file"]
        assert case["expected"] in FAILURE_KINDS, case["file"]


def test_corpus_exercises_the_whole_taxonomy():
    covered = {c["expected"] for c in CASES}
    assert covered == {
        "pattern-mismatch", "datatype-error", "missing-parameter",
        "extra-parameter", "range-error", "unknown-function",
    }
    # the four headline classes get several cases each
    for kind in ("pattern-mismatch", "datatype-error", "missing-parameter", "extra-parameter"):
        assert sum(1 for c in CASES if c["expected"] == kind) >= 5, kind


@pytest.mark.parametrize("case", CASES, ids=lambda c: c["file"])
def test_every_case_classifies_as_annotated(case, registry, strict_registry):
    spec, source = _spec(case, registry, strict_registry)
    text = (CORPUS / case["file"]).read_text(encoding="utf-8")
    binding, issue = classify_model_response(text, spec, source)
    assert issue is not None, f"{case['file']}: classifier accepted a malformed reply"
    assert binding is None
    assert issue.kind == case["expected"], (
        f"{case['file']}: expected {case['expected']}, got {issue.kind} ({issue.detail})"
    )


def test_classification_agreement_is_total(registry, strict_registry):
    agreed = 0
    for case in CASES:
        spec, source = _spec(case, registry, strict_registry)
        text = (CORPUS / case["file"]).read_text(encoding="utf-8")
        _, issue = classify_model_response(text, spec, source)
        if issue is not None and issue.kind == case["expected"]:
            agreed += 1
    assert agreed == len(CASES)
