"""Prompt assembly for the three agent stages.

Templates live as plain-text assets with $-placeholders; this module only
fills them in. The header constants below are part of the request surface:
offline responders locate the instruction and description blocks by them.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from string import Template

from .gateway import ChatRequest
from .registry import FunctionSpec, Registry

PROMPTS_DIR = Path(__file__).parent / "assets" / "prompts"

INSTRUCTION_HEADER = "Instruction:"
DESCRIPTION_HEADER = "Scene description:"


@lru_cache(maxsize=None)
def _template(name: str) -> Template:
    return Template((PROMPTS_DIR / f"{name}.txt").read_text(encoding="utf-8"))


def dispatch_tag(instruction_index: int) -> str:
    return f"dispatch/{instruction_index}"


def conceptualize_tag(function: str, instruction_index: int) -> str:
    return f"conceptualize/{function}/{instruction_index}"


def modeling_tag(function: str, instruction_index: int) -> str:
    return f"model/{function}/{instruction_index}"


def _catalog_lines(registry: Registry) -> str:
    blocks = []
    for f in registry:
        blocks.append(
            f"- {f.name}: {f.usage}\n"
            f"  example instruction: {f.dispatch_example.prompt}\n"
            f"  decision: {f.dispatch_example.response}"
        )
    return "\n".join(blocks)


def build_dispatch_request(registry: Registry, instruction: str,
                           applied: list[str], instruction_index: int) -> ChatRequest:
    system = _template("dispatch").substitute(catalog=_catalog_lines(registry))
    applied_line = ", ".join(applied) if applied else "(none)"
    user = (
        f"Functions already applied to the scene: [{applied_line}]\n"
        f"{INSTRUCTION_HEADER} {instruction}"
    )
    return ChatRequest(system=system, user=user, tag=dispatch_tag(instruction_index))


def build_conceptualization_request(spec: FunctionSpec, instruction: str,
                                    instruction_index: int) -> ChatRequest:
    system = _template("conceptualization").substitute(
        name=spec.name,
        usage=spec.usage,
        doc=spec.doc,
        requirements="\n".join(f"- {r}" for r in spec.info_requirements),
    )
    user = f"{INSTRUCTION_HEADER} {instruction}"
    return ChatRequest(
        system=system, user=user, tag=conceptualize_tag(spec.name, instruction_index)
    )


def build_modeling_request(spec: FunctionSpec, description: str,
                           instruction_index: int, error: str | None = None) -> ChatRequest:
    system = _template("modeling").substitute(
        name=spec.name,
        signature=spec.signature(),
        doc=spec.doc,
        code=spec.code,
        example_prompt=spec.modeling_example.prompt,
        example_response=spec.modeling_example.response,
    )
    user = f"{DESCRIPTION_HEADER}\n{description}"
    if error:
        user += (
            f"\n\nYour previous reply was rejected: {error}\n"
            f"Reply again with one corrected call to {spec.name}."
        )
    return ChatRequest(system=system, user=user, tag=modeling_tag(spec.name, instruction_index))
