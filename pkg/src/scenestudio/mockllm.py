"""Offline heuristic responder that stands in for a live model.

The responder reads the request tag to learn which agent role is being
played, pulls the instruction (or enriched description) out of the user turn
by the header markers the prompt builders emit, and answers with simple
keyword rules. Everything is derived from content hashes of the request
text, so identical sessions produce identical responses with no RNG state.
"""

from __future__ import annotations

import re

from .callspec import TypedValue
from .gateway import ChatRequest, Gateway, MockBackend
from .hashing import stable_u64, stable_unit
from .lexicon import color_lexicon, last_color_word, tokenize
from .prompts import DESCRIPTION_HEADER, INSTRUCTION_HEADER
from .registry import FunctionSpec, ParamSchema, Registry

# Instruction keywords that pull a catalog function into a follow-up plan.
_DISPATCH_KEYWORDS = (
    ("set_terrain", ("terrain", "ground", "meadow", "hill", "hills", "field", "valley", "land", "dunes")),
    ("add_trees", ("tree", "trees", "forest", "woods", "grove", "pine", "pines", "maple", "birch", "orchard")),
    ("add_flowers", ("flower", "flowers", "bloom", "blooms", "blossom", "blossoms", "petal", "petals", "floral")),
    ("set_sky_nishita", ("sky", "sun", "sunrise", "sunset", "dawn", "dusk", "morning", "evening", "noon", "night")),
    ("add_snow_layer", ("snow", "snowy", "frost", "frosty", "ice", "icy")),
    ("set_fog", ("fog", "foggy", "mist", "misty", "haze", "hazy")),
    ("add_water", ("water", "lake", "pond", "river", "stream", "sea", "shore")),
    ("set_camera", ("camera", "view", "viewpoint", "shot", "angle", "closeup", "wide")),
)

# Preferred value windows for seed-catalog parameters; keeps mock scenes small
# enough to build interactively while still spreading the histograms.
_SOFT_RANGES = {
    ("set_terrain", "size"): (70.0, 130.0),
    ("set_terrain", "roughness"): (0.2, 0.8),
    ("add_trees", "density"): (0.001, 0.006),
    ("add_trees", "trunk_height"): (3.0, 14.0),
    ("add_trees", "canopy_ratio"): (0.8, 2.0),
    ("add_flowers", "density"): (0.004, 0.015),
    ("add_flowers", "petal_count"): (5, 12),
    ("add_flowers", "petal_length"): (0.03, 0.12),
    ("add_flowers", "petal_curl"): (0.1, 0.7),
    ("add_flowers", "center_radius"): (0.005, 0.03),
    ("set_sky_nishita", "sun_elevation"): (8.0, 55.0),
    ("set_sky_nishita", "altitude"): (0.0, 400.0),
    ("add_snow_layer", "depth"): (0.05, 0.4),
    ("add_water", "level"): (-0.5, 1.5),
    ("add_water", "area_fraction"): (0.05, 0.35),
}


def _extract_after_header(text: str, header: str) -> str:
    idx = text.rfind(header)
    if idx < 0:
        return text
    return text[idx + len(header):].strip()


def _extract_instruction(user: str) -> str:
    body = _extract_after_header(user, INSTRUCTION_HEADER)
    return body.splitlines()[0].strip() if body else ""


class HeuristicResponder:
    """Keyword-rule agent trio. Callable as a MockBackend responder."""

    def __init__(self, registry: Registry):
        self.registry = registry

    def __call__(self, request: ChatRequest, attempt: int) -> str:
        role = request.tag.split("/", 1)[0]
        if role == "dispatch":
            return self._dispatch(request)
        if role == "conceptualize":
            return self._conceptualize(request)
        if role == "model":
            return self._model(request)
        raise ValueError(f"no heuristic for tag {request.tag!r}")

    def _spec_for(self, tag: str) -> FunctionSpec:
        name = tag.split("/")[1]
        spec = self.registry.get(name)
        if spec is None:
            raise ValueError(f"tag {tag!r} names an unregistered function")
        return spec

    # -- planner --------------------------------------------------------

    def _dispatch(self, request: ChatRequest) -> str:
        instruction = _extract_instruction(request.user)
        tokens = set(tokenize(instruction))
        if "winter" in tokens:
            return "FUNCTIONS: [add_snow_layer, update_trees]"
        known = set(self.registry.names())
        picked = []
        for name, words in _DISPATCH_KEYWORDS:
            if name in known and tokens.intersection(words):
                picked.append(name)
        return "FUNCTIONS: [" + ", ".join(picked) + "]"

    # -- writer ---------------------------------------------------------

    def _conceptualize(self, request: ChatRequest) -> str:
        spec = self._spec_for(request.tag)
        instruction = _extract_instruction(request.user)
        lines = [
            f"{req}: {req} rendered to match \"{instruction}\""
            for req in spec.info_requirements
        ]
        return "\n".join(lines)

    # -- designer -------------------------------------------------------

    def _model(self, request: ChatRequest) -> str:
        spec = self._spec_for(request.tag)
        description = _extract_after_header(request.user, DESCRIPTION_HEADER)
        args = ", ".join(
            f"{p.name}={self._value_for(spec, p, description).render()}"
            for p in spec.params
        )
        return f"{spec.name}({args})"

    def _value_for(self, spec: FunctionSpec, p: ParamSchema, description: str) -> TypedValue:
        key = f"{spec.name}.{p.name}|{description}"
        t = stable_unit(key)
        if p.kind == "color":
            word = last_color_word(description)
            if word is not None:
                return TypedValue("color", color_lexicon()[word])
            if p.default is not None:
                return p.default
            return TypedValue("color", (0.5, 0.5, 0.5))
        if p.kind == "enum":
            tokens = set(tokenize(description))
            hits = [c for c in p.choices if c.lower() in tokens]
            if hits:
                return TypedValue("enum", hits[-1])
            return TypedValue("enum", p.choices[stable_u64(key) % len(p.choices)])
        if p.kind == "float":
            lo, hi = self._window(spec, p)
            return TypedValue("float", round(lo + t * (hi - lo), 3))
        if p.kind == "int":
            lo, hi = self._window(spec, p)
            return TypedValue("int", int(round(lo + t * (hi - lo))))
        if p.kind == "bool":
            return TypedValue("bool", t < 0.5)
        if p.kind == "text":
            words = tokenize(description)[:4]
            return TypedValue("text", " ".join(words) or "scene")
        # vec3 and list kinds: stay on the documented default.
        if p.default is not None:
            return p.default
        if p.kind == "vec3":
            return TypedValue("vec3", (0.0, 0.0, 0.0))
        return TypedValue(p.kind, ())

    def _window(self, spec: FunctionSpec, p: ParamSchema) -> tuple[float, float]:
        soft = _SOFT_RANGES.get((spec.name, p.name))
        if soft is not None:
            return soft
        if p.range is not None:
            lo, hi = p.range
            span = hi - lo
            return (lo + 0.25 * span, hi - 0.25 * span)
        return (0.0, 10.0)


def mock_gateway(registry: Registry, scripted: dict[str, str | list[str]] | None = None,
                 record_to=None) -> Gateway:
    """Gateway wired to the heuristic responder, with optional canned
    responses per tag taking precedence."""
    return Gateway(MockBackend(HeuristicResponder(registry), scripted), record_to=record_to)
