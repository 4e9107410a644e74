"""Function registry: the document model every agent prompt is built from.

Each registered function carries everything an agent needs to reason about
it (usage line, doc, source, per-parameter schemas, worked examples) plus
the information requirements that drive the enrichment stage. Registries
load fail-closed from YAML: any malformed entry aborts the whole load.

Binding validation lives here too: a RawBinding from the parser either
becomes a fully typed ValidatedBinding (defaults filled and marked) or a
non-empty fault list, never both and never silence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import yaml

from .callspec import (
    CoercionError,
    Literal,
    ParseIssue,
    RawBinding,
    TypedValue,
    coerce,
    is_known_kind,
    parse_literal,
    typed_value_from_plain,
)
from .hashing import canonical_json_bytes, sha256_hex

_NAME_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")

ASSETS_DIR = Path(__file__).parent / "assets"
SEED_REGISTRY_PATH = ASSETS_DIR / "registry.yaml"


class RegistryError(ValueError):
    """Registry file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class ParamSchema:
    """Declared shape of one keyword parameter."""

    name: str
    kind: str
    range: tuple[float, float] | None = None
    choices: tuple[str, ...] | None = None
    default: TypedValue | None = None
    unit: str | None = None

    def describe(self) -> str:
        """One-line signature fragment used in prompts and error feedback."""
        bits = [self.kind]
        if self.range is not None:
            bits.append(f"range [{self.range[0]}, {self.range[1]}]")
        if self.choices:
            bits.append("one of " + "/".join(self.choices))
        if self.unit:
            bits.append(f"in {self.unit}")
        if self.default is not None:
            bits.append(f"default {self.default.render()}")
        return f"{self.name}: " + ", ".join(bits)

    def to_plain(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind}
        if self.range is not None:
            out["range"] = [self.range[0], self.range[1]]
        if self.choices is not None:
            out["choices"] = list(self.choices)
        if self.default is not None:
            out["default"] = self.default.to_plain()
        if self.unit is not None:
            out["unit"] = self.unit
        return out


@dataclass(frozen=True)
class Example:
    """Worked input/output pair shown to an agent verbatim."""

    prompt: str
    response: str


@dataclass(frozen=True)
class FunctionSpec:
    """One callable scene operation, as documented for the agents."""

    name: str
    usage: str
    doc: str
    code: str
    info_requirements: tuple[str, ...]
    params: tuple[ParamSchema, ...]
    modeling_example: Example
    dispatch_example: Example

    def param(self, name: str) -> ParamSchema | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def signature(self) -> str:
        return f"{self.name}({', '.join(p.describe() for p in self.params)})"


@dataclass(frozen=True)
class ValidatedBinding:
    """A fully typed call: every declared parameter bound, schema order.

    `defaulted` records which values were filled from schema defaults rather
    than inferred by an agent; metrics treat the two differently.
    """

    function: str
    values: tuple[tuple[str, TypedValue], ...]
    defaulted: frozenset[str]

    def value(self, name: str) -> TypedValue:
        for n, v in self.values:
            if n == name:
                return v
        raise KeyError(name)

    def render(self) -> str:
        return f"{self.function}(" + ", ".join(f"{n}={v.render()}" for n, v in self.values) + ")"

    def to_plain(self) -> dict:
        return {
            "function": self.function,
            "values": [
                {"name": n, "kind": v.kind, "value": v.to_plain(), "defaulted": n in self.defaulted}
                for n, v in self.values
            ],
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "ValidatedBinding":
        values = tuple((e["name"], typed_value_from_plain(e["kind"], e["value"])) for e in obj["values"])
        defaulted = frozenset(e["name"] for e in obj["values"] if e.get("defaulted"))
        return cls(function=obj["function"], values=values, defaulted=defaulted)


def validate_binding(spec: FunctionSpec, binding: RawBinding) -> tuple[ValidatedBinding | None, list[ParseIssue]]:
    """Coerce a raw call against its schema. Total: returns a binding or a
    non-empty issue list, never both. Missing parameters fill from defaults
    and are marked defaulted; a missing parameter without a default, an
    undeclared name, or an ill-typed value each yield one classified issue.
    """
    if binding.function != spec.name:
        raise ValueError(f"binding for {binding.function!r} validated against spec {spec.name!r}")
    issues: list[ParseIssue] = []
    provided: dict[str, TypedValue] = {}
    for name, lit in binding.args:
        schema = spec.param(name)
        if schema is None:
            issues.append(ParseIssue("extra-parameter", f"{spec.name} has no parameter '{name}'"))
            continue
        try:
            provided[name] = coerce(lit, schema)
        except CoercionError as e:
            issues.append(ParseIssue(e.kind, e.detail))
    given = set(binding.arg_names())
    values = []
    defaulted = set()
    for p in spec.params:
        if p.name in provided:
            values.append((p.name, provided[p.name]))
        elif p.name in given:
            pass  # provided but mistyped; already recorded above
        elif p.default is not None:
            values.append((p.name, p.default))
            defaulted.add(p.name)
        else:
            issues.append(
                ParseIssue("missing-parameter", f"{spec.name} requires '{p.name}' and it has no default")
            )
    if issues:
        return None, issues
    return ValidatedBinding(spec.name, tuple(values), frozenset(defaulted)), []


def _require(cond: bool, msg: str):
    if not cond:
        raise RegistryError(msg)


def _parse_param(fn_name: str, obj: dict) -> ParamSchema:
    _require(isinstance(obj, dict), f"{fn_name}: parameter entry must be a mapping")
    name = obj.get("name")
    kind = obj.get("kind")
    _require(isinstance(name, str) and _NAME_RE.match(name or ""), f"{fn_name}: bad parameter name {name!r}")
    _require(isinstance(kind, str) and is_known_kind(kind), f"{fn_name}.{name}: unknown kind {kind!r}")

    rng = obj.get("range")
    if rng is not None:
        _require(
            isinstance(rng, (list, tuple)) and len(rng) == 2 and all(isinstance(b, (int, float)) for b in rng),
            f"{fn_name}.{name}: range must be [lo, hi]",
        )
        lo, hi = float(rng[0]), float(rng[1])
        _require(lo <= hi, f"{fn_name}.{name}: range lo must not exceed hi")
        rng = (lo, hi)

    choices = obj.get("choices")
    if choices is not None:
        _require(
            isinstance(choices, list) and choices and all(isinstance(c, str) for c in choices),
            f"{fn_name}.{name}: choices must be a non-empty string list",
        )
        _require(len({c.lower() for c in choices}) == len(choices), f"{fn_name}.{name}: choices collide case-insensitively")
        choices = tuple(choices)
    from .callspec import base_kind

    _require((base_kind(kind) == "enum") == (choices is not None), f"{fn_name}.{name}: choices go with enum kinds only")

    unit = obj.get("unit")
    if unit is not None:
        _require(isinstance(unit, str), f"{fn_name}.{name}: unit must be text")

    schema = ParamSchema(name=name, kind=kind, range=rng, choices=choices, default=None, unit=unit)
    default = None
    if "default" in obj:
        try:
            default = typed_value_from_plain(kind, obj["default"])
        except ValueError as e:
            raise RegistryError(f"{fn_name}.{name}: bad default: {e}") from e
        # The default must satisfy the schema's own constraints.
        try:
            coerce(parse_literal(default.render()), schema)
        except ValueError as e:
            raise RegistryError(f"{fn_name}.{name}: default violates schema: {e}") from e
    return ParamSchema(name=name, kind=kind, range=rng, choices=choices, default=default, unit=unit)


def _parse_example(fn_name: str, label: str, obj) -> Example:
    _require(isinstance(obj, dict), f"{fn_name}: {label} must be a mapping")
    prompt = obj.get("prompt")
    response = obj.get("response")
    _require(isinstance(prompt, str) and prompt.strip() != "", f"{fn_name}: {label} needs a prompt")
    _require(isinstance(response, str) and response.strip() != "", f"{fn_name}: {label} needs a response")
    return Example(prompt=prompt.strip(), response=response.strip())


def _parse_function(obj: dict) -> FunctionSpec:
    _require(isinstance(obj, dict), "function entry must be a mapping")
    name = obj.get("name")
    _require(isinstance(name, str) and _NAME_RE.match(name or ""), f"bad function name {name!r}")
    for key in ("usage", "doc", "code"):
        _require(isinstance(obj.get(key), str) and obj[key].strip() != "", f"{name}: missing {key}")
    info = obj.get("info_requirements")
    _require(
        isinstance(info, list) and info and all(isinstance(s, str) and s.strip() for s in info),
        f"{name}: info_requirements must be a non-empty string list",
    )
    _require(len(set(info)) == len(info), f"{name}: duplicate info requirement")
    raw_params = obj.get("params")
    _require(isinstance(raw_params, list), f"{name}: params must be a list")
    params = tuple(_parse_param(name, p) for p in raw_params)
    _require(len({p.name for p in params}) == len(params), f"{name}: duplicate parameter name")
    spec = FunctionSpec(
        name=name,
        usage=obj["usage"].strip(),
        doc=obj["doc"].strip(),
        code=obj["code"].rstrip(),
        info_requirements=tuple(s.strip() for s in info),
        params=params,
        modeling_example=_parse_example(name, "modeling_example", obj.get("modeling_example")),
        dispatch_example=_parse_example(name, "dispatch_example", obj.get("dispatch_example")),
    )
    _check_modeling_example(spec)
    return spec


def _check_modeling_example(spec: FunctionSpec):
    """The worked call may only reference declared parameters."""
    from .callspec import scan_calls

    for call in scan_calls(spec.modeling_example.response):
        if call.function != spec.name:
            continue
        for arg_name in call.arg_names():
            _require(
                spec.param(arg_name) is not None,
                f"{spec.name}: modeling_example uses undeclared parameter '{arg_name}'",
            )


class Registry:
    """Ordered collection of FunctionSpecs plus an alias table."""

    def __init__(self, functions: list[FunctionSpec], aliases: dict[str, str] | None = None):
        names = [f.name for f in functions]
        _require(len(set(names)) == len(names), "duplicate function name")
        self._functions = list(functions)
        self._by_name = {f.name: f for f in functions}
        self._aliases = {}
        for alias, target in (aliases or {}).items():
            _require(isinstance(alias, str) and _NAME_RE.match(alias), f"bad alias {alias!r}")
            _require(target in self._by_name, f"alias {alias!r} points at unknown function {target!r}")
            _require(alias not in self._by_name, f"alias {alias!r} shadows a function name")
            self._aliases[alias] = target

    def __len__(self) -> int:
        return len(self._functions)

    def __iter__(self):
        return iter(self._functions)

    @property
    def functions(self) -> list[FunctionSpec]:
        return list(self._functions)

    @property
    def aliases(self) -> dict[str, str]:
        return dict(self._aliases)

    def names(self) -> list[str]:
        return [f.name for f in self._functions]

    def catalog(self) -> list[tuple[str, str]]:
        """(name, usage) pairs in catalog order; all the planner may see."""
        return [(f.name, f.usage) for f in self._functions]

    def get(self, name: str) -> FunctionSpec | None:
        resolved = self.resolve(name)
        return self._by_name.get(resolved) if resolved else None

    def resolve(self, name: str) -> str | None:
        """Canonical function name for a raw name or alias; None if unknown."""
        name = name.strip()
        if name in self._by_name:
            return name
        return self._aliases.get(name)

    def version_hash(self) -> str:
        """Content hash over every field that affects agent behaviour."""
        return sha256_hex(canonical_json_bytes(self.to_plain()))

    def to_plain(self) -> dict:
        return {
            "aliases": {k: self._aliases[k] for k in sorted(self._aliases)},
            "functions": [
                {
                    "name": f.name,
                    "usage": f.usage,
                    "doc": f.doc,
                    "code": f.code,
                    "info_requirements": list(f.info_requirements),
                    "params": [p.to_plain() for p in f.params],
                    "modeling_example": {"prompt": f.modeling_example.prompt, "response": f.modeling_example.response},
                    "dispatch_example": {"prompt": f.dispatch_example.prompt, "response": f.dispatch_example.response},
                }
                for f in self._functions
            ],
        }

    def subset(self, names: list[str]) -> list[FunctionSpec]:
        """Specs for the given canonical names, in registry order."""
        wanted = set(names)
        return [f for f in self._functions if f.name in wanted]


def load_registry(path: str | Path) -> Registry:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise RegistryError(f"{path}: not valid YAML: {e}") from e
    return registry_from_plain(data, where=str(path))


def registry_from_plain(data, where: str = "registry") -> Registry:
    _require(isinstance(data, dict), f"{where}: top level must be a mapping")
    raw_fns = data.get("functions")
    _require(isinstance(raw_fns, list), f"{where}: 'functions' must be a list")
    functions = [_parse_function(f) for f in raw_fns]
    aliases = data.get("aliases") or {}
    _require(isinstance(aliases, dict), f"{where}: 'aliases' must be a mapping")
    return Registry(functions, aliases)


def serialize_registry(registry: Registry) -> str:
    """Canonical YAML text; load_registry over it reproduces the version hash."""
    return yaml.safe_dump(registry.to_plain(), sort_keys=False, allow_unicode=False, width=100)


def seed_registry() -> Registry:
    """The built-in eight-function outdoor-scene catalog."""
    return load_registry(SEED_REGISTRY_PATH)
