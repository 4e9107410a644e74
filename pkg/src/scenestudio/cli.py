"""Command line entry points: serve, run, export, eval.

`run` drives the pipeline over an instruction file and writes deterministic
artifacts; `serve` exposes the session service over HTTP; `export` dumps a
stored session's artifacts; `eval` compares pipeline variants over a corpus
of scene files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .agents import Toggles, instructions_from_lines, run_instruction
from .codegen import apply_delta, emit_blender_script, empty_program, program_to_yaml
from .gateway import Cassette, Gateway, MockBackend, ReplayBackend
from .metrics import report_table, run_ablation
from .mockllm import HeuristicResponder
from .procgen import build_scene, export_obj, export_scene_json
from .registry import load_registry, seed_registry

DEFAULT_PORT = 8000


def default_data_dir() -> Path:
    return Path(os.environ.get("STUDIO_DATA_DIR", "studio-data"))


def _load_registry(path: str | None):
    return load_registry(path) if path else seed_registry()


def _build_gateway(backend: str, registry, cassette: str | None, record: Cassette | None) -> Gateway:
    if backend == "mock":
        return Gateway(MockBackend(HeuristicResponder(registry)), record_to=record)
    if backend == "replay":
        if not cassette or not Path(cassette).is_file():
            raise SystemExit(f"replay backend needs an existing cassette, got {cassette!r}")
        return Gateway(ReplayBackend(Cassette.load(cassette)), record_to=record)
    from .gateway import LiveBackend

    return Gateway(LiveBackend(), record_to=record)


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_run(args) -> int:
    registry = _load_registry(args.registry)
    lines = Path(args.instructions).read_text(encoding="utf-8").splitlines()
    instructions = instructions_from_lines(lines)
    if not instructions:
        raise SystemExit(f"{args.instructions}: no instructions found")
    record = Cassette() if args.record else None
    gateway = _build_gateway(args.backend, registry, args.cassette, record)
    toggles = Toggles(skip_enrichment=args.no_ca, skip_planning=args.no_tda)

    program = empty_program(registry, seed=args.seed)
    transcripts = []
    for instruction in instructions:
        delta, entry = run_instruction(
            instruction, program.function_names(), registry, gateway, toggles
        )
        before = program
        program = apply_delta(program, delta)
        transcripts.append(entry.to_plain())
        from .codegen import diff_programs

        diff = diff_programs(before, program)
        print(f"[{instruction.index}] {instruction.text}")
        for line in diff.summary_lines():
            print(f"    {line}")
        for failure in delta.failures:
            print(f"    ! {failure.stage}/{failure.kind}: {failure.detail}")

    if args.record:
        record.save(args.record)
        print(f"recorded {len(record)} responses to {args.record}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "script.py").write_text(emit_blender_script(program), encoding="utf-8")
        graph = build_scene(program)
        (out / "scene.json").write_text(export_scene_json(graph), encoding="utf-8")
        (out / "transcript.json").write_text(
            json.dumps(transcripts, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"artifacts written to {out}")
    return 0


def cmd_export(args) -> int:
    from .session import SessionService

    service = SessionService(args.data_dir)
    session = service.get(args.session)
    program = session.current_program()
    graph = build_scene(program)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "script.py").write_text(emit_blender_script(program), encoding="utf-8")
    (out / "scene.json").write_text(export_scene_json(graph), encoding="utf-8")
    (out / "scene.obj").write_text(export_obj(graph), encoding="utf-8")
    (out / "program.yaml").write_text(program_to_yaml(program), encoding="utf-8")
    (out / "transcript.json").write_text(
        json.dumps(service.transcript(session.id), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"session {session.id} exported to {out}")
    return 0


def cmd_eval(args) -> int:
    registry = _load_registry(args.registry)
    corpus_dir = Path(args.corpus)
    files = sorted(corpus_dir.glob("*.txt"))
    if not files:
        raise SystemExit(f"{corpus_dir}: no .txt scene files")
    corpus = [(f.stem, f.read_text(encoding="utf-8").splitlines()) for f in files]
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]

    if args.backend == "mock":
        def gateway_factory(name, variant):
            return Gateway(MockBackend(HeuristicResponder(registry)))
    elif args.backend == "replay":
        cassette_dir = Path(args.cassettes) if args.cassettes else corpus_dir / "cassettes"

        def gateway_factory(name, variant):
            path = cassette_dir / f"{name}.{variant}.json"
            if not path.is_file():
                raise SystemExit(f"replay cassette missing: {path}")
            return Gateway(ReplayBackend(Cassette.load(path)))
    else:
        raise SystemExit("eval supports mock and replay backends")

    reports = run_ablation(corpus, variants, gateway_factory, registry, base_seed=args.seed)
    table = report_table(reports)
    print(table, end="")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(table, encoding="utf-8")
    (out / "report.json").write_text(
        json.dumps([r.to_plain() for r in reports], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"report written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="studio", description="Instruction-driven 3D scene studio.")
    parser.add_argument("--data-dir", type=Path, default=None,
                        help="session storage directory (default: $STUDIO_DATA_DIR or ./studio-data)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("run", help="run an instruction file through the pipeline")
    p.add_argument("--registry", default=None, help="registry YAML (default: built-in catalog)")
    p.add_argument("--backend", choices=["mock", "replay", "live"], default="mock")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instructions", required=True, help="text file, one instruction per line")
    p.add_argument("--out", default=None, help="directory for script/scene/transcript artifacts")
    p.add_argument("--cassette", default=None, help="cassette to replay from")
    p.add_argument("--record", default=None, help="record responses to this cassette path")
    p.add_argument("--no-ca", action="store_true", help="skip the enrichment stage")
    p.add_argument("--no-tda", action="store_true", help="skip planning; apply the full catalog each time")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("export", help="export a stored session's artifacts")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("eval", help="compare pipeline variants over a corpus")
    p.add_argument("--corpus", required=True, help="directory of scene .txt files")
    p.add_argument("--variants", default="full,no_CA,no_TDA")
    p.add_argument("--backend", choices=["mock", "replay"], default="mock")
    p.add_argument("--out", required=True, help="directory for report.txt and report.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--registry", default=None)
    p.add_argument("--cassettes", default=None, help="cassette directory for --backend replay")
    p.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.data_dir is None:
        args.data_dir = default_data_dir()
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
