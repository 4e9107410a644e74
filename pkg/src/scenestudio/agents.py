"""The three-stage instruction pipeline: plan, enrich, bind.

One instruction flows through up to three agent stages. The planner picks
which scene functions the instruction touches (the first instruction takes
the whole catalog without a model call). The enricher expands the
instruction into per-function visual detail. The modeler turns that detail
into one validated keyword call per function. Each stage degrades
independently: a failed function is recorded and skipped, the rest of the
instruction still lands.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .callspec import (
    FailureRecord,
    ParseIssue,
    parse_dispatch,
    parse_enrichment,
    primary_issue,
    scan_calls,
    _LOOP_HEAD,
)
from .gateway import Gateway, RetryExhausted
from .prompts import (
    build_conceptualization_request,
    build_dispatch_request,
    build_modeling_request,
)
from .registry import FunctionSpec, Registry, ValidatedBinding, validate_binding

INSTRUCTION_KINDS = ("initial", "subsequence")

DISPATCH_ATTEMPTS = 1
ENRICH_ATTEMPTS = 1
MODELING_ATTEMPTS = 2


@dataclass(frozen=True)
class Instruction:
    """One line of user intent, positioned in its session."""

    index: int
    text: str
    kind: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("instruction index counts from 0")
        if self.kind not in INSTRUCTION_KINDS:
            raise ValueError(f"unknown instruction kind {self.kind!r}")
        if (self.index == 0) != (self.kind == "initial"):
            raise ValueError("index 0 and kind 'initial' imply each other")
        if not self.text.strip():
            raise ValueError("instruction text must be non-empty")


def make_instruction(index: int, text: str) -> Instruction:
    return Instruction(index=index, text=text.strip(), kind="initial" if index == 0 else "subsequence")


def instructions_from_lines(lines) -> list[Instruction]:
    """One instruction per non-empty line, in order."""
    texts = [ln.strip() for ln in lines if ln.strip()]
    return [make_instruction(i, t) for i, t in enumerate(texts)]


@dataclass(frozen=True)
class Toggles:
    """Ablation switches: drop the enrichment stage, or the planning stage
    (every instruction then takes the full catalog)."""

    skip_enrichment: bool = False
    skip_planning: bool = False

    def to_plain(self) -> dict:
        return {"skip_enrichment": self.skip_enrichment, "skip_planning": self.skip_planning}

    @classmethod
    def from_plain(cls, obj: dict) -> "Toggles":
        return cls(
            skip_enrichment=bool(obj.get("skip_enrichment", False)),
            skip_planning=bool(obj.get("skip_planning", False)),
        )


# External variant names accepted by the evaluation interface.
VARIANT_TOGGLES = {
    "full": Toggles(),
    "no_CA": Toggles(skip_enrichment=True),
    "no_TDA": Toggles(skip_planning=True),
}


@dataclass(frozen=True)
class DispatchPlan:
    """Which functions one instruction touches, and why."""

    instruction_index: int
    selected: tuple[str, ...]
    rationale: str

    def to_plain(self) -> dict:
        return {
            "instruction_index": self.instruction_index,
            "selected": list(self.selected),
            "rationale": self.rationale,
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "DispatchPlan":
        return cls(
            instruction_index=int(obj["instruction_index"]),
            selected=tuple(obj["selected"]),
            rationale=obj.get("rationale", ""),
        )


@dataclass(frozen=True)
class EnrichedDescription:
    """Per-function visual detail: one answer per information requirement,
    in requirement order."""

    instruction_index: int
    function: str
    answers: tuple[tuple[str, str], ...]

    def text(self) -> str:
        return "\n".join(f"{req}: {desc}" for req, desc in self.answers)

    def to_plain(self) -> dict:
        return {
            "instruction_index": self.instruction_index,
            "function": self.function,
            "answers": [[req, desc] for req, desc in self.answers],
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "EnrichedDescription":
        return cls(
            instruction_index=int(obj["instruction_index"]),
            function=obj["function"],
            answers=tuple((a[0], a[1]) for a in obj["answers"]),
        )


@dataclass(frozen=True)
class SceneDelta:
    """Everything one instruction produced: the plan, the enriched
    descriptions, the validated bindings (catalog order), and every failure
    met along the way. Functions that failed have no binding here and leave
    the program untouched."""

    instruction_index: int
    plan: DispatchPlan
    enrichments: tuple[EnrichedDescription, ...]
    bindings: tuple[ValidatedBinding, ...]
    failures: tuple[FailureRecord, ...]

    def binding_for(self, function: str) -> ValidatedBinding | None:
        for b in self.bindings:
            if b.function == function:
                return b
        return None

    def failed_functions(self) -> tuple[str, ...]:
        bound = {b.function for b in self.bindings}
        out = []
        for f in self.failures:
            if f.function and f.function not in bound and f.function not in out:
                out.append(f.function)
        return tuple(out)

    def to_plain(self) -> dict:
        return {
            "instruction_index": self.instruction_index,
            "plan": self.plan.to_plain(),
            "enrichments": [e.to_plain() for e in self.enrichments],
            "bindings": [b.to_plain() for b in self.bindings],
            "failures": [f.to_plain() for f in self.failures],
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "SceneDelta":
        return cls(
            instruction_index=int(obj["instruction_index"]),
            plan=DispatchPlan.from_plain(obj["plan"]),
            enrichments=tuple(EnrichedDescription.from_plain(e) for e in obj["enrichments"]),
            bindings=tuple(ValidatedBinding.from_plain(b) for b in obj["bindings"]),
            failures=tuple(FailureRecord.from_plain(f) for f in obj["failures"]),
        )


def _catalog_order(registry: Registry, names) -> tuple[str, ...]:
    wanted = set(names)
    return tuple(n for n in registry.names() if n in wanted)


def plan_dispatch(instruction: Instruction, applied: list[str], registry: Registry,
                  gateway: Gateway, toggles: Toggles) -> tuple[DispatchPlan, list[FailureRecord]]:
    """Stage one. Initial instructions (and the planning-off ablation) take
    the full catalog without any model call."""
    if instruction.kind == "initial" or toggles.skip_planning:
        return (
            DispatchPlan(
                instruction_index=instruction.index,
                selected=tuple(registry.names()),
                rationale="full catalog applies: scene is built from scratch",
            ),
            [],
        )

    parsed: dict = {}

    def validate(text: str, attempt: int) -> FailureRecord | None:
        selected, issues = parse_dispatch(text, registry)
        fatal = [i for i in issues if i.kind == "pattern-mismatch"]
        if fatal:
            return FailureRecord(
                stage="dispatch", kind=fatal[0].kind, detail=fatal[0].detail,
                attempt=attempt, instruction_index=instruction.index,
            )
        parsed["selected"] = selected
        parsed["issues"] = issues
        parsed["text"] = text
        return None

    request = build_dispatch_request(registry, instruction.text, applied, instruction.index)
    try:
        _, failures = gateway.complete_with_retry(
            request, attempts=DISPATCH_ATTEMPTS, validate=validate,
            stage="dispatch", instruction_index=instruction.index,
        )
    except RetryExhausted as e:
        plan = DispatchPlan(instruction.index, (), rationale="planner reply unusable; nothing selected")
        return plan, list(e.failures)
    for issue in parsed.get("issues", []):
        failures.append(
            FailureRecord(
                stage="dispatch", kind=issue.kind, detail=issue.detail,
                attempt=1, instruction_index=instruction.index,
            )
        )
    plan = DispatchPlan(
        instruction_index=instruction.index,
        selected=_catalog_order(registry, parsed["selected"]),
        rationale=parsed["text"].strip(),
    )
    return plan, failures


def enrich(spec: FunctionSpec, instruction: Instruction,
           gateway: Gateway) -> tuple[EnrichedDescription | None, list[FailureRecord]]:
    """Stage two: expand the instruction into answers for this function's
    information requirements."""
    parsed: dict = {}

    def validate(text: str, attempt: int) -> FailureRecord | None:
        answers, _, issues = parse_enrichment(text, spec.info_requirements)
        worst = primary_issue(issues)
        if worst is not None:
            return FailureRecord(
                stage="conceptualization", kind=worst.kind, detail=worst.detail,
                attempt=attempt, instruction_index=instruction.index, function=spec.name,
            )
        parsed["answers"] = answers
        return None

    request = build_conceptualization_request(spec, instruction.text, instruction.index)
    try:
        _, failures = gateway.complete_with_retry(
            request, attempts=ENRICH_ATTEMPTS, validate=validate,
            stage="conceptualization", instruction_index=instruction.index, function=spec.name,
        )
    except RetryExhausted as e:
        return None, list(e.failures)
    enriched = EnrichedDescription(
        instruction_index=instruction.index, function=spec.name, answers=tuple(parsed["answers"])
    )
    return enriched, failures


def classify_model_response(text: str, spec: FunctionSpec,
                            registry: Registry) -> tuple[ValidatedBinding | None, ParseIssue | None]:
    """Judge one modeling reply: find the call to this function and validate
    it against the schema. Stray calls to other catalog functions are
    tolerated when the target call is present; a reply with calls but none
    to the target is an unknown-function fault; no calls (or loop syntax)
    is a pattern mismatch."""
    if _LOOP_HEAD.search(text):
        return None, ParseIssue("pattern-mismatch", "loop syntax is not supported; emit flat function calls")
    calls = scan_calls(text)
    if not calls:
        return None, ParseIssue("pattern-mismatch", "no function call expression found in response")
    mine = [c for c in calls if registry.resolve(c.function) == spec.name]
    if not mine:
        named = ", ".join(sorted({c.function for c in calls}))
        return None, ParseIssue("unknown-function", f"expected a call to {spec.name}, got: {named}")
    target = mine[0]
    if target.function != spec.name:  # called through an alias
        target = replace(target, function=spec.name)
    binding, issues = validate_binding(spec, target)
    if binding is None:
        return None, primary_issue(issues)
    return binding, None


def model(spec: FunctionSpec, description: str, instruction: Instruction,
          registry: Registry, gateway: Gateway) -> tuple[ValidatedBinding | None, list[FailureRecord]]:
    """Stage three: one validated call, with one corrective retry. The
    second attempt's prompt carries the first rejection's detail."""
    parsed: dict = {}

    def validate(text: str, attempt: int) -> FailureRecord | None:
        binding, issue = classify_model_response(text, spec, registry)
        if issue is not None:
            return FailureRecord(
                stage="modeling", kind=issue.kind, detail=issue.detail,
                attempt=attempt, instruction_index=instruction.index, function=spec.name,
            )
        parsed["binding"] = binding
        return None

    def make_request(attempt: int, last_failure: FailureRecord | None):
        error = last_failure.detail if last_failure is not None else None
        return build_modeling_request(spec, description, instruction.index, error=error)

    try:
        _, failures = gateway.complete_with_retry(
            make_request, attempts=MODELING_ATTEMPTS, validate=validate,
            stage="modeling", instruction_index=instruction.index, function=spec.name,
        )
    except RetryExhausted as e:
        return None, list(e.failures)
    return parsed["binding"], failures


@dataclass(frozen=True)
class TranscriptEntry:
    """One instruction's complete conversational record: every gateway
    exchange it caused plus every classified failure. `scene` tells pooled
    metrics which session or corpus scene the entry belongs to, so equal
    instruction indices from different scenes stay distinct."""

    instruction_index: int
    exchanges: tuple[dict, ...]
    failures: tuple[dict, ...]
    scene: str = ""

    def to_plain(self) -> dict:
        return {
            "instruction_index": self.instruction_index,
            "scene": self.scene,
            "exchanges": list(self.exchanges),
            "failures": list(self.failures),
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "TranscriptEntry":
        return cls(
            instruction_index=int(obj["instruction_index"]),
            exchanges=tuple(obj["exchanges"]),
            failures=tuple(obj["failures"]),
            scene=obj.get("scene", ""),
        )


def run_instruction(instruction: Instruction, session_state, registry: Registry,
                    gateway: Gateway, toggles: Toggles = Toggles(),
                    scene: str = "") -> tuple[SceneDelta, TranscriptEntry]:
    """run_pipeline plus a transcript entry scoped to this instruction."""
    watermark = len(gateway.exchanges)
    delta = run_pipeline(instruction, session_state, registry, gateway, toggles)
    entry = TranscriptEntry(
        instruction_index=instruction.index,
        exchanges=tuple(e.to_plain() for e in gateway.exchanges[watermark:]),
        failures=tuple(f.to_plain() for f in delta.failures),
        scene=scene,
    )
    return delta, entry


def run_pipeline(instruction: Instruction, session_state, registry: Registry,
                 gateway: Gateway, toggles: Toggles = Toggles()) -> SceneDelta:
    """Run one instruction through every stage and gather its SceneDelta.

    `session_state` is the sequence of function names already applied to the
    scene (planner context). Failures never abort the instruction: each
    failed function is recorded and the rest proceed.
    """
    applied = list(session_state or [])
    failures: list[FailureRecord] = []
    plan, plan_failures = plan_dispatch(instruction, applied, registry, gateway, toggles)
    failures.extend(plan_failures)

    enrichments: list[EnrichedDescription] = []
    bindings: list[ValidatedBinding] = []
    for spec in registry.subset(list(plan.selected)):
        description = instruction.text
        if not toggles.skip_enrichment:
            enriched, enrich_failures = enrich(spec, instruction, gateway)
            failures.extend(enrich_failures)
            if enriched is None:
                continue  # nothing trustworthy to model from
            enrichments.append(enriched)
            description = enriched.text()
        binding, model_failures = model(spec, description, instruction, registry, gateway)
        failures.extend(model_failures)
        if binding is not None:
            bindings.append(binding)
    return SceneDelta(
        instruction_index=instruction.index,
        plan=plan,
        enrichments=tuple(enrichments),
        bindings=tuple(bindings),
        failures=tuple(failures),
    )
