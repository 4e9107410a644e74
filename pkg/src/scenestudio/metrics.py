"""Evaluation metrics: failure rate, parameter diversity, text alignment.

Three measurements over finished sessions, plus the ablation driver that
compares pipeline variants over a corpus of instruction files. Every number
here is a pure function of transcripts and programs, so reports reproduce
exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .agents import Instruction, TranscriptEntry, Toggles, VARIANT_TOGGLES, make_instruction, run_instruction
from .callspec import TypedValue
from .codegen import SceneProgram, apply_delta, empty_program
from .hashing import stable_u64
from .lexicon import content_tokens, nearest_color_name
from .procgen import build_scene
from .registry import ParamSchema, Registry

BINS = 100


class MetricsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Value binning
# ---------------------------------------------------------------------------


def _bin_component(v: float, lo: float, hi: float) -> int:
    if hi <= lo:
        raise MetricsError(f"degenerate range [{lo}, {hi}]")
    b = math.floor(BINS * (v - lo) / (hi - lo))
    return min(max(b, 0), BINS - 1)


def bin_value(schema: ParamSchema, value: TypedValue):
    """Histogram category for one parameter value.

    Floats bin into 100 equal cells over the declared range (the top edge
    folds into the last cell); ints, enums, and bools are their own
    category; colors bin per component over [0, 1] and 3-vectors over the
    declared range, both yielding a 3-tuple category. A float or vector
    parameter without a declared range cannot be binned.
    """
    kind = value.kind
    if kind == "float":
        if schema.range is None:
            raise MetricsError(f"parameter {schema.name} has no declared range to bin over")
        return _bin_component(value.value, schema.range[0], schema.range[1])
    if kind in ("int", "bool"):
        return value.value
    if kind == "enum":
        return value.value
    if kind == "color":
        return tuple(_bin_component(c, 0.0, 1.0) for c in value.value)
    if kind == "vec3":
        if schema.range is None:
            raise MetricsError(f"parameter {schema.name} has no declared range to bin over")
        lo, hi = schema.range
        return tuple(_bin_component(c, lo, hi) for c in value.value)
    raise MetricsError(f"no binning rule for kind {kind!r}")


@dataclass(frozen=True)
class DiversityObservation:
    """One agent-inferred parameter value, reduced to its category."""

    function: str
    param: str
    category: object

    def key(self) -> tuple:
        return (self.function, self.param, self.category)


def observations_from_program(program: SceneProgram, registry: Registry) -> list[DiversityObservation]:
    """Pool every agent-inferred value in the program. Values filled from
    schema defaults are flagged at validation time and never counted."""
    out = []
    for call in program.calls:
        spec = registry.get(call.binding.function)
        if spec is None:
            raise MetricsError(f"program function {call.binding.function!r} not in registry")
        for name, value in call.binding.values:
            if name in call.binding.defaulted:
                continue
            out.append(DiversityObservation(
                function=spec.name, param=name, category=bin_value(spec.param(name), value)
            ))
    return out


def shannon_diversity(observations) -> float:
    """Shannon entropy (natural log) over pooled observation categories.

    k equally likely categories measure ln(k); no observations measure 0.
    """
    counts = Counter(obs.key() if isinstance(obs, DiversityObservation) else tuple(obs) for obs in observations)
    n = sum(counts.values())
    if n == 0:
        return 0.0
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log(p)
    return h


# ---------------------------------------------------------------------------
# Failure rate
# ---------------------------------------------------------------------------


def _modeling_tasks(transcripts) -> tuple[dict, dict]:
    """Group modeling activity by (scene, instruction, function): the last
    attempt seen per task and the attempts that carry failure records. The
    scene label keeps equal instruction indices from pooled scenes apart."""
    last_attempt: dict[tuple, int] = {}
    failed_attempts: dict[tuple, set] = {}
    for entry in transcripts:
        plain = entry.to_plain() if isinstance(entry, TranscriptEntry) else entry
        scene = plain.get("scene", "")
        for ex in plain["exchanges"]:
            tag = ex["tag"]
            if not tag.startswith("model/"):
                continue
            _, function, idx = tag.split("/")
            key = (scene, int(idx), function)
            last_attempt[key] = max(last_attempt.get(key, 0), int(ex["attempt"]))
        for f in plain["failures"]:
            if f["stage"] != "modeling":
                continue
            key = (scene, int(f["instruction_index"]), f["function"])
            last_attempt[key] = max(last_attempt.get(key, 0), int(f["attempt"]))
            failed_attempts.setdefault(key, set()).add(int(f["attempt"]))
    return last_attempt, failed_attempts


def failure_rate(transcripts) -> float:
    """Fraction of modeling tasks whose final attempt still failed.

    A task that recovered on a retry does not count. Transcripts with no
    modeling activity at all have no defined rate.
    """
    last_attempt, failed_attempts = _modeling_tasks(transcripts)
    if not last_attempt:
        raise MetricsError("no modeling calls in transcripts; failure rate undefined")
    failed = sum(
        1 for key, last in last_attempt.items() if last in failed_attempts.get(key, ())
    )
    return failed / len(last_attempt)


def modeling_call_count(transcripts) -> int:
    last_attempt, _ = _modeling_tasks(transcripts)
    return len(last_attempt)


# ---------------------------------------------------------------------------
# Alignment proxy
# ---------------------------------------------------------------------------


def _scene_vocabulary(scene_doc: dict) -> set[str]:
    vocab: set[str] = set()
    for node in scene_doc.get("nodes", []):
        vocab.update(node.get("source", "").split("_"))
        vocab.update(node.get("kind", "").split("_"))
        geometry = node.get("geometry") or {}
        for v in geometry.get("params", {}).values():
            if isinstance(v, str):
                vocab.add(v.lower())
        for attr in node.get("attributes", {}).values():
            if attr.get("kind") == "enum":
                vocab.add(str(attr["value"]).lower())
            if attr.get("kind") == "color":
                vocab.add(nearest_color_name(tuple(attr["value"])))
    vocab.discard("")
    return vocab


def alignment_proxy(instruction_text: str, scene_doc: dict) -> float:
    """Fraction of content-bearing instruction tokens the scene reflects.

    A token matches when it (or its plural-stripped form) appears among the
    scene's source function name words, node kinds, enum values, or the
    lexicon names of node colors. No content tokens means 0 by convention.
    """
    tokens = content_tokens(instruction_text)
    if not tokens:
        return 0.0
    vocab = _scene_vocabulary(scene_doc)
    hits = sum(1 for t in tokens if t in vocab or t.rstrip("s") in vocab)
    return hits / len(tokens)


# ---------------------------------------------------------------------------
# Ablation driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AblationReport:
    """One pipeline variant's aggregate numbers over a corpus."""

    variant: str
    alignment: float
    failure_rate: float
    diversity: float
    scene_count: int
    call_count: int

    def to_plain(self) -> dict:
        return {
            "variant": self.variant,
            "alignment": self.alignment,
            "failure_rate": self.failure_rate,
            "diversity": self.diversity,
            "scene_count": self.scene_count,
            "call_count": self.call_count,
        }


def eval_protocol(lines: list[str]) -> list[Instruction]:
    """Each corpus file contributes its first line as the initial
    instruction and its second as the one follow-up edit."""
    texts = [ln.strip() for ln in lines if ln.strip()]
    if len(texts) < 2:
        raise MetricsError("corpus file needs an initial and a follow-up instruction")
    return [make_instruction(0, texts[0]), make_instruction(1, texts[1])]


def scene_seed(base_seed: int, scene_name: str) -> int:
    return stable_u64(f"eval|{base_seed}|{scene_name}")


def run_ablation(corpus: list[tuple[str, list[str]]], variants: list[str],
                 gateway_factory, registry: Registry, base_seed: int = 0) -> list[AblationReport]:
    """Run every (variant, corpus scene) pair and aggregate per variant.

    `corpus` holds (scene name, instruction lines) pairs; `gateway_factory`
    builds a fresh gateway per (scene, variant) so transcripts never leak
    across runs.
    """
    reports = []
    for variant in variants:
        if variant not in VARIANT_TOGGLES:
            raise MetricsError(f"unknown variant {variant!r}; expected one of {sorted(VARIANT_TOGGLES)}")
        toggles: Toggles = VARIANT_TOGGLES[variant]
        transcripts: list[TranscriptEntry] = []
        observations: list[DiversityObservation] = []
        alignments: list[float] = []
        for name, lines in corpus:
            instructions = eval_protocol(lines)
            gateway = gateway_factory(name, variant)
            program = empty_program(registry, seed=scene_seed(base_seed, name))
            for instruction in instructions:
                delta, entry = run_instruction(
                    instruction, program.function_names(), registry, gateway, toggles,
                    scene=name,
                )
                program = apply_delta(program, delta)
                transcripts.append(entry)
            scene_doc = build_scene(program).to_plain()
            text = " ".join(i.text for i in instructions)
            alignments.append(alignment_proxy(text, scene_doc))
            observations.extend(observations_from_program(program, registry))
        reports.append(AblationReport(
            variant=variant,
            alignment=sum(alignments) / len(alignments) if alignments else 0.0,
            failure_rate=failure_rate(transcripts),
            diversity=shannon_diversity(observations),
            scene_count=len(corpus),
            call_count=modeling_call_count(transcripts),
        ))
    return reports


def report_table(reports: list[AblationReport]) -> str:
    """Plain-text comparison table, one variant per row."""
    header = f"{'variant':<8} {'alignment':>9} {'fail_rate':>9} {'diversity':>9} {'scenes':>6} {'calls':>6}"
    rows = [header, "-" * len(header)]
    for r in reports:
        rows.append(
            f"{r.variant:<8} {r.alignment:>9.3f} {r.failure_rate:>9.3f} "
            f"{r.diversity:>9.3f} {r.scene_count:>6d} {r.call_count:>6d}"
        )
    return "\n".join(rows) + "\n"
