#!/usr/bin/env python3
"""Run the pipeline-variant comparison over the shipped evaluation corpus.

Thin wrapper around `studio eval` with the bundled corpus as the default,
comparing the full pipeline against the enrichment-skipping (no_CA) and
planning-skipping (no_TDA) variants on the mock backend.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from scenestudio.cli import main as studio_main

ASSETS = Path(__file__).resolve().parents[1] / "src" / "scenestudio" / "assets"
EVAL_CORPUS = ASSETS / "fixtures" / "eval_corpus"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", default=str(EVAL_CORPUS))
    parser.add_argument("--out", default="ablation-report")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--variants", default="full,no_CA,no_TDA")
    args = parser.parse_args(argv)

    return studio_main(
        [
            "eval",
            "--corpus",
            args.corpus,
            "--out",
            args.out,
            "--seed",
            str(args.seed),
            "--variants",
            args.variants,
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
