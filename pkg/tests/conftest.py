# Shared fixtures plus the acceptance summary: every test in
# test_acceptance.py gets one PASS/FAIL line at the end of the run.

from __future__ import annotations

from pathlib import Path

import pytest

from scenestudio.mockllm import mock_gateway
from scenestudio.registry import Registry, load_registry, seed_registry

FIXTURES = Path(__file__).parent / "fixtures"
ASSETS = Path(__file__).parents[1] / "src" / "scenestudio" / "assets"
DEMO_INSTRUCTIONS = ASSETS / "fixtures" / "demo_instructions.txt"
EVAL_CORPUS = ASSETS / "fixtures" / "eval_corpus"


@pytest.fixture(scope="session")
def registry() -> Registry:
    return seed_registry()


@pytest.fixture(scope="session")
def strict_registry() -> Registry:
    return load_registry(FIXTURES / "strict_registry.yaml")


@pytest.fixture()
def gateway(registry):
    return mock_gateway(registry)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            if lines.get(name) != "FAIL":
                lines[name] = status
    if lines:
        terminalreporter.section("acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]}  {name}")
