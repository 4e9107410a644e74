"""Shared word lists: the color lexicon and the stopword set."""

from __future__ import annotations

import json
import math
import re
from functools import lru_cache
from pathlib import Path

ASSETS_DIR = Path(__file__).parent / "assets"

Color = tuple[float, float, float]

_WORD_RE = re.compile(r"[a-z]+")


@lru_cache(maxsize=1)
def color_lexicon() -> dict[str, Color]:
    data = json.loads((ASSETS_DIR / "colors.json").read_text(encoding="utf-8"))
    return {name: tuple(float(c) for c in rgb) for name, rgb in data.items()}


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = (ASSETS_DIR / "stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    stop = stopwords()
    return [t for t in tokenize(text) if t not in stop]


def last_color_word(text: str) -> str | None:
    lex = color_lexicon()
    hit = None
    for tok in tokenize(text):
        if tok in lex:
            hit = tok
    return hit


def nearest_color_name(rgb) -> str:
    """Lexicon entry closest to rgb in plain Euclidean distance. Ties break
    toward the earlier lexicon entry so the answer is order-stable."""
    best_name = None
    best_d = math.inf
    for name, ref in color_lexicon().items():
        d = sum((a - b) ** 2 for a, b in zip(rgb, ref))
        if d < best_d:
            best_name, best_d = name, d
    return best_name
