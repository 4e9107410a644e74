"""Agent output grammars: dispatch lists, enrichment answers, call expressions.

Three small grammars (documented in docs/GRAMMAR.md) define every parseable
agent response. Extraction is lenient: the grammars are scanned for anywhere
in the response text, so surrounding prose and fenced code blocks are fine.
All functions here are pure; failures come back as data, never as silence.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

# Scalar value kinds. "list-of-<kind>" composes any of them.
VALUE_KINDS = ("float", "int", "bool", "enum", "color", "vec3", "text")

STAGES = ("dispatch", "conceptualization", "modeling")

# Failure taxonomy, in primary-classification order: when one response exhibits
# several faults, the earliest kind in this tuple wins. cassette-miss sits last
# because it never co-occurs with a parse fault.
FAILURE_KINDS = (
    "pattern-mismatch",
    "unknown-function",
    "datatype-error",
    "range-error",
    "missing-parameter",
    "extra-parameter",
    "cassette-miss",
)
FAILURE_ORDER = {kind: i for i, kind in enumerate(FAILURE_KINDS)}


@dataclass(frozen=True)
class FailureRecord:
    """One classified breakdown of one gateway attempt."""

    stage: str
    kind: str
    detail: str
    attempt: int = 1
    instruction_index: int = 0
    function: str | None = None

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.kind not in FAILURE_KINDS:
            raise ValueError(f"unknown failure kind {self.kind!r}")
        if self.attempt < 1:
            raise ValueError("attempt must be >= 1")

    def to_plain(self) -> dict:
        return {
            "stage": self.stage,
            "kind": self.kind,
            "detail": self.detail,
            "attempt": self.attempt,
            "instruction_index": self.instruction_index,
            "function": self.function,
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "FailureRecord":
        return cls(
            stage=obj["stage"],
            kind=obj["kind"],
            detail=obj["detail"],
            attempt=int(obj.get("attempt", 1)),
            instruction_index=int(obj.get("instruction_index", 0)),
            function=obj.get("function"),
        )


@dataclass(frozen=True)
class ParseIssue:
    """Parser-level fault, before any agent/session context is attached."""

    kind: str
    detail: str


def base_kind(kind: str) -> str:
    """Strip list-of- prefixes: list-of-float -> float."""
    while kind.startswith("list-of-"):
        kind = kind[len("list-of-"):]
    return kind


def is_known_kind(kind: str) -> bool:
    return base_kind(kind) in VALUE_KINDS


# ---------------------------------------------------------------------------
# Typed values
# ---------------------------------------------------------------------------


def _fmt_float(v: float) -> str:
    # repr() is the shortest decimal that round-trips the binary value.
    return repr(float(v))


@dataclass(frozen=True)
class TypedValue:
    """Tagged runtime value: the only currency bindings and scenes trade in.

    value payload per kind:
      float -> float            int -> int            bool -> bool
      enum/text -> str          color/vec3 -> 3-tuple of float
      list-of-<k> -> tuple of TypedValue sharing that inner kind
    """

    kind: str
    value: object

    def __post_init__(self):
        k = self.kind
        v = self.value
        if k == "float":
            if not isinstance(v, float) or isinstance(v, bool):
                raise ValueError("float kind requires a float payload")
        elif k == "int":
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError("int kind requires an int payload")
        elif k == "bool":
            if not isinstance(v, bool):
                raise ValueError("bool kind requires a bool payload")
        elif k in ("enum", "text"):
            if not isinstance(v, str):
                raise ValueError(f"{k} kind requires a str payload")
        elif k in ("color", "vec3"):
            if not (isinstance(v, tuple) and len(v) == 3 and all(isinstance(c, float) for c in v)):
                raise ValueError(f"{k} kind requires a 3-tuple of floats")
            if k == "color" and not all(0.0 <= c <= 1.0 for c in v):
                raise ValueError("color components must lie in [0, 1]")
        elif k.startswith("list-of-"):
            inner = k[len("list-of-"):]
            if not isinstance(v, tuple) or not all(isinstance(e, TypedValue) for e in v):
                raise ValueError("list kind requires a tuple of TypedValue")
            if any(e.kind != inner for e in v):
                raise ValueError("list elements must all share the declared kind")
        else:
            raise ValueError(f"unknown value kind {k!r}")

    def to_plain(self):
        if self.kind in ("color", "vec3"):
            return list(self.value)
        if self.kind.startswith("list-of-"):
            return [e.to_plain() for e in self.value]
        return self.value

    def render(self) -> str:
        """Canonical source-literal form (the form the emitted script uses)."""
        k = self.kind
        if k == "float":
            return _fmt_float(self.value)
        if k == "int":
            return str(self.value)
        if k == "bool":
            return "True" if self.value else "False"
        if k in ("enum", "text"):
            return json.dumps(self.value)
        if k in ("color", "vec3"):
            return "(" + ", ".join(_fmt_float(c) for c in self.value) + ")"
        return "[" + ", ".join(e.render() for e in self.value) + "]"


def typed_value_from_plain(kind: str, value) -> TypedValue:
    """Build a TypedValue from a plain (de)serialized payload."""
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected number for float, got {value!r}")
        return TypedValue("float", float(value))
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected int, got {value!r}")
        return TypedValue("int", value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"expected bool, got {value!r}")
        return TypedValue("bool", value)
    if kind in ("enum", "text"):
        if not isinstance(value, str):
            raise ValueError(f"expected text, got {value!r}")
        return TypedValue(kind, value)
    if kind in ("color", "vec3"):
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ValueError(f"expected 3 components for {kind}, got {value!r}")
        return TypedValue(kind, tuple(float(c) for c in value))
    if kind.startswith("list-of-"):
        inner = kind[len("list-of-"):]
        if not isinstance(value, (list, tuple)):
            raise ValueError(f"expected list for {kind}, got {value!r}")
        return TypedValue(kind, tuple(typed_value_from_plain(inner, e) for e in value))
    raise ValueError(f"unknown value kind {kind!r}")


# ---------------------------------------------------------------------------
# Literals (lexical tokens inside call expressions)
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?\Z")


@dataclass(frozen=True)
class Literal:
    """One parsed literal token. Equality ignores the source text so that a
    reparse of canonical output compares equal to the original."""

    kind: str  # int | float | bool | string | tuple | list | invalid
    value: object
    text: str = field(compare=False, default="")

    @property
    def ok(self) -> bool:
        if self.kind == "invalid":
            return False
        if self.kind in ("tuple", "list"):
            return all(e.ok for e in self.value)
        return True


def _unquote(s: str) -> str | None:
    if len(s) < 2 or s[0] not in "\"'" or s[-1] != s[0]:
        return None
    body = s[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == s[0]:
            return None  # unescaped quote inside
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _split_top_level(s: str) -> list[str]:
    """Split on commas at bracket/quote depth zero."""
    parts = []
    depth = 0
    quote = None
    start = 0
    i = 0
    while i < len(s):
        c = s[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                quote = None
        elif c in "\"'":
            quote = c
        elif c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        elif c == "," and depth == 0:
            parts.append(s[start:i])
            start = i + 1
        i += 1
    parts.append(s[start:])
    return parts


def parse_literal(text: str) -> Literal:
    src = text
    s = text.strip()
    if not s:
        return Literal("invalid", None, src)
    if s in ("true", "True"):
        return Literal("bool", True, src)
    if s in ("false", "False"):
        return Literal("bool", False, src)
    if _INT_RE.match(s):
        return Literal("int", int(s), src)
    if _FLOAT_RE.match(s):
        return Literal("float", float(s), src)
    if s[0] in "\"'":
        v = _unquote(s)
        if v is not None:
            return Literal("string", v, src)
        return Literal("invalid", None, src)
    if s[0] == "(" and s[-1] == ")":
        return _parse_sequence(s[1:-1], "tuple", src)
    if s[0] == "[" and s[-1] == "]":
        return _parse_sequence(s[1:-1], "list", src)
    return Literal("invalid", None, src)


def _parse_sequence(inner: str, kind: str, src: str) -> Literal:
    inner = inner.strip()
    if not inner:
        return Literal(kind, (), src)
    parts = _split_top_level(inner)
    if parts and parts[-1].strip() == "":  # trailing comma
        parts = parts[:-1]
    elems = tuple(parse_literal(p) for p in parts)
    if any(e.kind == "invalid" for e in elems):
        return Literal("invalid", None, src)
    return Literal(kind, elems, src)


def render_literal(lit: Literal) -> str:
    k = lit.kind
    if k == "int":
        return str(lit.value)
    if k == "float":
        return _fmt_float(lit.value)
    if k == "bool":
        return "True" if lit.value else "False"
    if k == "string":
        return json.dumps(lit.value)
    if k == "tuple":
        body = ", ".join(render_literal(e) for e in lit.value)
        if len(lit.value) == 1:
            body += ","
        return "(" + body + ")"
    if k == "list":
        return "[" + ", ".join(render_literal(e) for e in lit.value) + "]"
    raise ValueError("cannot render an invalid literal")


# ---------------------------------------------------------------------------
# Call expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawBinding:
    """An unvalidated call expression: function name plus named literal args."""

    function: str
    args: tuple[tuple[str, Literal], ...]
    span: tuple[int, int] = field(compare=False, default=(0, 0))

    def arg(self, name: str) -> Literal | None:
        for n, lit in self.args:
            if n == name:
                return lit
        return None

    def arg_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.args)


_CALL_HEAD = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)[ \t]*\(")
_ARG_NAME = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(?!=)\s*", re.S)
_LOOP_HEAD = re.compile(r"^[ \t]*(?:for[ \t]+\w+[ \t]+in\b|while[ \t].*)[^\n]*:[ \t]*$", re.M)

# Words that look like call heads inside prose but are statements, not calls.
_NON_CALL_NAMES = frozenset({"if", "while", "for", "print", "return", "assert", "def", "not", "and", "or", "in"})


def _match_close(text: str, open_idx: int) -> int | None:
    depth = 0
    quote = None
    i = open_idx
    while i < len(text):
        c = text[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                quote = None
        elif c in "\"'":
            quote = c
        elif c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def _parse_arglist(inner: str) -> tuple[tuple[str, Literal], ...] | None:
    """Parse `name=literal, ...`; None when the argument grammar is broken
    (positional argument, duplicate name, empty assignment). Literal *values*
    are not judged here; invalid tokens survive so coercion can classify them."""
    inner = inner.strip()
    if not inner:
        return ()
    args = []
    seen = set()
    for part in _split_top_level(inner):
        if part.strip() == "":
            return None
        m = _ARG_NAME.match(part)
        if not m or m.end() > len(part):
            return None
        name = m.group(1)
        value_text = part[m.end():]
        if value_text.strip() == "" or name in seen:
            return None
        seen.add(name)
        args.append((name, parse_literal(value_text)))
    return tuple(args)


def scan_calls(text: str) -> list[RawBinding]:
    """Every well-formed call expression in the text, in source order.

    A candidate must have balanced parens and keyword-only arguments; anything
    else (prose parentheticals, statements) is skipped. A successfully parsed
    call consumes its span, so calls nested inside argument lists are not
    reported separately.
    """
    calls = []
    pos = 0
    while True:
        m = _CALL_HEAD.search(text, pos)
        if not m:
            break
        name = m.group(1)
        open_idx = m.end() - 1
        close_idx = _match_close(text, open_idx)
        if close_idx is None or name in _NON_CALL_NAMES:
            pos = m.start() + len(name)
            continue
        args = _parse_arglist(text[open_idx + 1:close_idx])
        if args is None:
            pos = m.start() + len(name)
            continue
        calls.append(RawBinding(name, args, span=(m.start(), close_idx + 1)))
        pos = close_idx + 1
    return calls


def parse_calls(text: str, spec) -> tuple[list[RawBinding], list[ParseIssue]]:
    """Extract calls to spec.name from raw response text.

    Loop constructs are rejected wholesale (flat call lists only). Calls to
    other names are reported as unknown-function and skipped; zero call
    expressions at all is a pattern mismatch.
    """
    if _LOOP_HEAD.search(text):
        return [], [ParseIssue("pattern-mismatch", "loop syntax is not supported; emit flat function calls")]
    calls = scan_calls(text)
    issues: list[ParseIssue] = []
    mine = [c for c in calls if c.function == spec.name]
    for c in calls:
        if c.function != spec.name:
            issues.append(ParseIssue("unknown-function", f"call to undeclared function '{c.function}'"))
    if not calls:
        issues.append(ParseIssue("pattern-mismatch", "no function call expression found in response"))
    return mine, issues


def serialize_call(binding: RawBinding) -> str:
    args = ", ".join(f"{n}={render_literal(lit)}" for n, lit in binding.args)
    return f"{binding.function}({args})"


def serialize_calls(bindings: list[RawBinding]) -> str:
    return "\n".join(serialize_call(b) for b in bindings)


# ---------------------------------------------------------------------------
# Coercion into typed values
# ---------------------------------------------------------------------------


class CoercionError(ValueError):
    """Literal does not fit the declared parameter schema."""

    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind  # datatype-error | range-error
        self.detail = detail


class _InnerSchema:
    """Schema shim for list elements: inherits range/choices, narrows kind."""

    def __init__(self, outer, kind):
        self.name = outer.name
        self.kind = kind
        self.range = outer.range
        self.choices = outer.choices
        self.unit = None
        self.default = None


def _numeric(lit: Literal) -> float | None:
    if lit.kind in ("int", "float") and not isinstance(lit.value, bool):
        return float(lit.value)
    return None


def _range_check(schema, v: float):
    if schema.range is not None:
        lo, hi = schema.range
        if not (lo <= v <= hi):
            raise CoercionError(
                "range-error", f"{schema.name}={_fmt_float(v)} outside [{_fmt_float(lo)}, {_fmt_float(hi)}]"
            )


def coerce(lit: Literal, schema) -> TypedValue:
    """Coerce one literal to the schema's kind.

    Widening int->float is the only implicit conversion; float literals are
    never truncated to int. Enum text matches case-insensitively. A value for
    an enum outside its choice set, or a number outside its declared range,
    is a range fault; everything shape-related is a datatype fault.
    """
    kind = schema.kind
    if not lit.ok:
        raise CoercionError("datatype-error", f"{schema.name}: '{lit.text.strip()}' is not a literal "
                                              f"(expressions are not evaluated)")
    if kind == "float":
        v = _numeric(lit)
        if v is None:
            raise CoercionError("datatype-error", f"{schema.name}: expected float, got {lit.kind}")
        _range_check(schema, v)
        return TypedValue("float", v)
    if kind == "int":
        if lit.kind != "int":
            raise CoercionError("datatype-error", f"{schema.name}: expected int, got {lit.kind}")
        _range_check(schema, float(lit.value))
        return TypedValue("int", lit.value)
    if kind == "bool":
        if lit.kind != "bool":
            raise CoercionError("datatype-error", f"{schema.name}: expected bool, got {lit.kind}")
        return TypedValue("bool", lit.value)
    if kind == "text":
        if lit.kind != "string":
            raise CoercionError("datatype-error", f"{schema.name}: expected quoted text, got {lit.kind}")
        return TypedValue("text", lit.value)
    if kind == "enum":
        if lit.kind != "string":
            raise CoercionError("datatype-error", f"{schema.name}: expected quoted choice, got {lit.kind}")
        choices = schema.choices or ()
        for c in choices:
            if c.lower() == lit.value.lower():
                return TypedValue("enum", c)
        raise CoercionError("range-error", f"{schema.name}: '{lit.value}' not one of {list(choices)}")
    if kind in ("color", "vec3"):
        if lit.kind not in ("tuple", "list") or len(lit.value) != 3:
            raise CoercionError("datatype-error", f"{schema.name}: expected 3-component tuple, got {lit.kind}")
        comps = []
        for e in lit.value:
            v = _numeric(e)
            if v is None:
                raise CoercionError("datatype-error", f"{schema.name}: component '{e.text.strip()}' is not a number")
            comps.append(v)
        if kind == "color":
            for v in comps:
                if not (0.0 <= v <= 1.0):
                    raise CoercionError("range-error", f"{schema.name}: color component {_fmt_float(v)} outside [0, 1]")
        else:
            for v in comps:
                _range_check(schema, v)
        return TypedValue(kind, tuple(comps))
    if kind.startswith("list-of-"):
        if lit.kind not in ("list", "tuple"):
            raise CoercionError("datatype-error", f"{schema.name}: expected a list, got {lit.kind}")
        inner = _InnerSchema(schema, kind[len("list-of-"):])
        return TypedValue(kind, tuple(coerce(e, inner) for e in lit.value))
    raise ValueError(f"unknown schema kind {kind!r}")


# ---------------------------------------------------------------------------
# Dispatch-list grammar
# ---------------------------------------------------------------------------

_FUNCTIONS_LINE = re.compile(r"^[ \t]*functions[ \t]*:[ \t]*\[([^\]\n]*)\][ \t]*\.?[ \t]*$", re.I | re.M)


def parse_dispatch(text: str, registry) -> tuple[list[str], list[ParseIssue]]:
    """Extract the first `FUNCTIONS: [a, b, ...]` line and resolve names.

    Names go through the registry's alias table; unknown names are dropped
    with an unknown-function issue; duplicates keep their first occurrence.
    An empty bracket list is a valid empty plan.
    """
    m = _FUNCTIONS_LINE.search(text)
    if not m:
        return [], [ParseIssue("pattern-mismatch", "no 'FUNCTIONS: [...]' line found in response")]
    issues: list[ParseIssue] = []
    selected: list[str] = []
    body = m.group(1).strip()
    if body:
        for raw in body.split(","):
            name = raw.strip().strip("'\"")
            if not name:
                continue
            resolved = registry.resolve(name)
            if resolved is None:
                issues.append(ParseIssue("unknown-function", f"dispatch named unknown function '{name}'; dropped"))
            elif resolved not in selected:
                selected.append(resolved)
    return selected, issues


# ---------------------------------------------------------------------------
# Enrichment-answer grammar
# ---------------------------------------------------------------------------

_BULLET = re.compile(r"^[\s]*(?:[-*•]|\d+[.)])\s*")


def _normalize_label(s: str) -> str:
    return " ".join(re.findall(r"[a-z0-9]+", s.lower()))


def parse_enrichment(text: str, info_requirements) -> tuple[list[tuple[str, str]], bool, list[ParseIssue]]:
    """Match `name: description` lines against the requirement names.

    Matching is case- and punctuation-insensitive. When at least 80% of the
    non-empty lines carry no recognizable label the parser falls back to
    positional matching over paragraphs (order-preserving zip). Returns
    (answers, positional_flag, issues) with one missing-answer issue per
    unmatched requirement.
    """
    reqs = list(info_requirements)
    if not reqs:
        raise ValueError("info_requirements must be non-empty")
    norm_to_req = {_normalize_label(r): r for r in reqs}

    lines = [_BULLET.sub("", ln).strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    labeled: dict[str, str] = {}
    label_hits = 0
    for ln in lines:
        if ":" not in ln:
            continue
        key, rest = ln.split(":", 1)
        req = norm_to_req.get(_normalize_label(key))
        if req is not None:
            label_hits += 1
            if req not in labeled and rest.strip():
                labeled[req] = rest.strip()

    positional = bool(lines) and (label_hits / len(lines)) < 0.2
    answers: list[tuple[str, str]] = []
    issues: list[ParseIssue] = []
    if positional:
        blocks = [" ".join(b.split()) for b in re.split(r"\n\s*\n", text) if b.strip()]
        for i, req in enumerate(reqs):
            if i < len(blocks):
                answers.append((req, blocks[i]))
            else:
                issues.append(ParseIssue("pattern-mismatch", f"missing answer for '{req}'"))
    else:
        for req in reqs:
            if req in labeled:
                answers.append((req, labeled[req]))
            else:
                issues.append(ParseIssue("pattern-mismatch", f"missing answer for '{req}'"))
    return answers, positional, issues


def primary_issue(issues: list[ParseIssue]) -> ParseIssue | None:
    """The single issue that classifies an attempt, per the fixed fault order."""
    if not issues:
        return None
    return min(enumerate(issues), key=lambda t: (FAILURE_ORDER[t[1].kind], t[0]))[1]
