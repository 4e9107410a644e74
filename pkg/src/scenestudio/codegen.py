"""Scene programs: the durable call-level state of a session.

A SceneProgram holds at most one validated call per catalog function, in
catalog order, plus the seed that makes geometry deterministic and, per
call, the index of the instruction that last touched it. Instructions land
as SceneDeltas; applying a delta replaces only the calls it carries, so an
untouched call survives as the same object, bit for bit.

The program also renders to an executable script: a fixed header, one
import stanza, then one keyword call per program call with parameters in
schema order and shortest round-trip floats, so equal programs emit equal
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from . import __version__
from .agents import SceneDelta
from .callspec import TypedValue
from .hashing import canonical_json_bytes, sha256_hex
from .registry import Registry, ValidatedBinding

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ProgramCall:
    """One function's current call plus the instruction that set it."""

    binding: ValidatedBinding
    provenance: int

    def to_plain(self) -> dict:
        return {"binding": self.binding.to_plain(), "provenance": self.provenance}

    @classmethod
    def from_plain(cls, obj: dict) -> "ProgramCall":
        return cls(binding=ValidatedBinding.from_plain(obj["binding"]), provenance=int(obj["provenance"]))


@dataclass(frozen=True)
class SceneProgram:
    """Ordered calls + seed. `catalog` pins the function order so the
    program stays self-contained; `registry_version` records which catalog
    produced it."""

    calls: tuple[ProgramCall, ...]
    seed: int
    catalog: tuple[str, ...]
    registry_version: str

    def __post_init__(self):
        if not (0 <= self.seed <= MAX_SEED):
            raise ValueError("seed must fit in 64 bits")
        names = [c.binding.function for c in self.calls]
        if len(set(names)) != len(names):
            raise ValueError("one call per function")
        order = {n: i for i, n in enumerate(self.catalog)}
        if any(n not in order for n in names):
            missing = [n for n in names if n not in order]
            raise ValueError(f"calls outside the catalog: {missing}")
        if names != sorted(names, key=order.__getitem__):
            raise ValueError("calls must follow catalog order")

    def call_for(self, function: str) -> ProgramCall | None:
        for c in self.calls:
            if c.binding.function == function:
                return c
        return None

    def function_names(self) -> tuple[str, ...]:
        return tuple(c.binding.function for c in self.calls)

    def to_plain(self) -> dict:
        return {
            "seed": self.seed,
            "catalog": list(self.catalog),
            "registry_version": self.registry_version,
            "calls": [c.to_plain() for c in self.calls],
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "SceneProgram":
        return cls(
            calls=tuple(ProgramCall.from_plain(c) for c in obj["calls"]),
            seed=int(obj["seed"]),
            catalog=tuple(obj["catalog"]),
            registry_version=obj["registry_version"],
        )

    def content_hash(self) -> str:
        return sha256_hex(canonical_json_bytes(self.to_plain()))


def empty_program(registry: Registry, seed: int) -> SceneProgram:
    return SceneProgram(
        calls=(), seed=seed, catalog=tuple(registry.names()), registry_version=registry.version_hash()
    )


def apply_delta(program: SceneProgram, delta: SceneDelta) -> SceneProgram:
    """Fold one instruction's bindings into the program. Calls the delta
    does not carry are reused unchanged (same objects); carried ones get
    the delta's instruction index as provenance."""
    by_name = {c.binding.function: c for c in program.calls}
    for binding in delta.bindings:
        by_name[binding.function] = ProgramCall(binding=binding, provenance=delta.instruction_index)
    ordered = tuple(by_name[n] for n in program.catalog if n in by_name)
    return SceneProgram(
        calls=ordered, seed=program.seed, catalog=program.catalog,
        registry_version=program.registry_version,
    )


# ---------------------------------------------------------------------------
# Script emission
# ---------------------------------------------------------------------------

SCRIPT_MODULE = "scene_functions"


def emit_blender_script(program: SceneProgram) -> str:
    """Render the program as an executable Python-syntax scene script.

    Equal programs emit byte-identical text: fixed header carrying the tool
    version and the program content hash, one import stanza, then the calls
    in program order with keyword arguments in schema order.
    """
    lines = [
        f"# scene script (scenestudio {__version__})",
        f"# program: {program.content_hash()}",
        f"# seed: {program.seed}",
        "",
    ]
    names = sorted(program.function_names())
    if names:
        lines.append(f"from {SCRIPT_MODULE} import (")
        for n in names:
            lines.append(f"    {n},")
        lines.append(")")
        lines.append("")
    for call in program.calls:
        lines.append(call.binding.render())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Program serialization (same format family as the registry file)
# ---------------------------------------------------------------------------

PROGRAM_FORMAT_VERSION = 1


def program_to_yaml(program: SceneProgram) -> str:
    doc = {"format": PROGRAM_FORMAT_VERSION, "program": program.to_plain()}
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=False, width=100)


def program_from_yaml(text: str) -> SceneProgram:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or doc.get("format") != PROGRAM_FORMAT_VERSION:
        raise ValueError(f"not a version-{PROGRAM_FORMAT_VERSION} program document")
    return SceneProgram.from_plain(doc["program"])


# ---------------------------------------------------------------------------
# Program diffing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamChange:
    """One parameter's value moving between two programs."""

    function: str
    param: str
    old: TypedValue
    new: TypedValue

    def render(self) -> str:
        return f"{self.function}.{self.param}: {self.old.render()} -> {self.new.render()}"


@dataclass(frozen=True)
class ParamDiff:
    """Call-level difference between two programs: per-parameter changes for
    functions present in both, plus whole functions added or removed."""

    changed: tuple[ParamChange, ...]
    added: tuple[str, ...]
    removed: tuple[str, ...]

    def empty(self) -> bool:
        return not (self.changed or self.added or self.removed)

    def to_plain(self) -> dict:
        return {
            "changed": [
                {
                    "function": c.function,
                    "param": c.param,
                    "old": {"kind": c.old.kind, "value": c.old.to_plain()},
                    "new": {"kind": c.new.kind, "value": c.new.to_plain()},
                }
                for c in self.changed
            ],
            "added": list(self.added),
            "removed": list(self.removed),
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for name in self.added:
            lines.append(f"+ {name}")
        for name in self.removed:
            lines.append(f"- {name}")
        for c in self.changed:
            lines.append(f"~ {c.render()}")
        if not lines:
            lines.append("(no changes)")
        return lines


def diff_programs(old: SceneProgram, new: SceneProgram) -> ParamDiff:
    """Value-level diff. The diff is empty exactly when both programs bind
    the same functions to the same values."""
    old_by = {c.binding.function: c.binding for c in old.calls}
    new_by = {c.binding.function: c.binding for c in new.calls}
    order = {n: i for i, n in enumerate(new.catalog)}
    added = tuple(sorted(set(new_by) - set(old_by), key=lambda n: order.get(n, len(order))))
    removed = tuple(sorted(set(old_by) - set(new_by), key=lambda n: order.get(n, len(order))))
    changed: list[ParamChange] = []
    for name in sorted(set(old_by) & set(new_by), key=lambda n: order.get(n, len(order))):
        before, after = old_by[name], new_by[name]
        after_values = dict(after.values)
        for pname, old_value in before.values:
            new_value = after_values.get(pname)
            if new_value is not None and new_value != old_value:
                changed.append(ParamChange(function=name, param=pname, old=old_value, new=new_value))
    return ParamDiff(changed=tuple(changed), added=added, removed=removed)
