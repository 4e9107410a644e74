"""Stateful editing sessions with durable snapshots and undo.

A session is an instruction history plus one program snapshot per
instruction; snapshot k is always apply_delta(snapshot k-1, delta k), which
`audit` re-checks from disk-trusted parts. Mutations persist before they
touch in-memory state, and the on-disk commit point is the session manifest
rewrite: a storage fault before that leaves both disk and memory on the
previous state. One instruction may be in flight per session; concurrent
submits are refused, never queued.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .agents import (
    Instruction,
    SceneDelta,
    Toggles,
    TranscriptEntry,
    make_instruction,
    run_instruction,
)
from .codegen import (
    ParamDiff,
    SceneProgram,
    apply_delta,
    diff_programs,
    emit_blender_script,
    empty_program,
    program_from_yaml,
    program_to_yaml,
)
from .gateway import BACKEND_NAMES, Cassette, Gateway, MockBackend, ReplayBackend
from .mockllm import HeuristicResponder
from .procgen import build_scene, export_scene_json
from .registry import Registry, seed_registry, load_registry

SESSION_FORMAT_VERSION = 1

STATUS_IDLE = "idle"
STATUS_BUSY = "busy"


class SessionError(RuntimeError):
    pass


class SessionBusy(SessionError):
    """An instruction is already in flight for this session."""


class NothingToUndo(SessionError):
    pass


class UnknownSession(SessionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    """Backend choice plus everything needed to reproduce the session."""

    backend: str = "mock"
    seed: int = 0
    toggles: Toggles = field(default_factory=Toggles)
    registry_path: str | None = None
    cassette_path: str | None = None

    def __post_init__(self):
        if self.backend not in BACKEND_NAMES:
            raise SessionError(f"unknown backend {self.backend!r}; expected one of {BACKEND_NAMES}")

    def to_plain(self) -> dict:
        return {
            "backend": self.backend,
            "seed": self.seed,
            "toggles": self.toggles.to_plain(),
            "registry_path": self.registry_path,
            "cassette_path": self.cassette_path,
        }

    @classmethod
    def from_plain(cls, obj: dict) -> "SessionConfig":
        return cls(
            backend=obj["backend"],
            seed=int(obj["seed"]),
            toggles=Toggles.from_plain(obj.get("toggles", {})),
            registry_path=obj.get("registry_path"),
            cassette_path=obj.get("cassette_path"),
        )


@dataclass
class Session:
    """In-memory view of one session's full history."""

    id: str
    config: SessionConfig
    registry: Registry
    instructions: list[Instruction] = field(default_factory=list)
    deltas: list[SceneDelta] = field(default_factory=list)
    snapshots: list[SceneProgram] = field(default_factory=list)
    transcripts: list[TranscriptEntry] = field(default_factory=list)

    def base_program(self) -> SceneProgram:
        return empty_program(self.registry, seed=self.config.seed)

    def current_program(self) -> SceneProgram:
        return self.snapshots[-1] if self.snapshots else self.base_program()

    def applied_functions(self) -> tuple[str, ...]:
        return self.current_program().function_names()


@dataclass(frozen=True)
class InstructionResult:
    """What one mutation (submit or undo) did to the session. Failures ride
    along in-band; a submit with failures still lands its snapshot."""

    session_id: str
    instruction_index: int
    status: str
    plan: dict | None
    delta: dict | None
    diff: dict
    diff_summary: list[str]
    failures: list[dict]
    scene: dict

    def to_plain(self) -> dict:
        return {
            "session_id": self.session_id,
            "instruction_index": self.instruction_index,
            "status": self.status,
            "plan": self.plan,
            "delta": self.delta,
            "diff": self.diff,
            "diff_summary": self.diff_summary,
            "failures": self.failures,
            "scene": self.scene,
        }


def build_gateway(config: SessionConfig) -> Gateway:
    """Wire the configured backend. Replay wants its cassette at creation
    time: a missing recording should fail the session, not the Nth submit."""
    if config.backend == "mock":
        registry = load_config_registry(config)
        return Gateway(MockBackend(HeuristicResponder(registry)))
    if config.backend == "replay":
        if not config.cassette_path or not Path(config.cassette_path).is_file():
            raise SessionError(f"replay backend needs an existing cassette, got {config.cassette_path!r}")
        return Gateway(ReplayBackend(Cassette.load(config.cassette_path)))
    from .gateway import LiveBackend

    return Gateway(LiveBackend())


def load_config_registry(config: SessionConfig) -> Registry:
    if config.registry_path:
        return load_registry(config.registry_path)
    return seed_registry()


class SessionStore:
    """Directory-per-session structured text storage.

    <data_dir>/<id>/session.json     manifest: config, instruction texts
    <data_dir>/<id>/snapshot_N.yaml  program after instruction N
    <data_dir>/<id>/delta_N.json     what instruction N changed
    <data_dir>/<id>/transcript_N.json  exchanges and failures for N

    Only files the manifest's instruction count references are trusted;
    the manifest rewrite is the commit point.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)

    def session_dir(self, session_id: str) -> Path:
        return self.data_dir / session_id

    def session_ids(self) -> list[str]:
        if not self.data_dir.is_dir():
            return []
        return sorted(p.name for p in self.data_dir.iterdir() if (p / "session.json").is_file())

    def _write_text(self, path: Path, text: str):
        """Atomic single-file write: temp file in place, then rename."""
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)

    def _manifest(self, session: Session) -> str:
        doc = {
            "format": SESSION_FORMAT_VERSION,
            "id": session.id,
            "config": session.config.to_plain(),
            "registry_version": session.registry.version_hash(),
            "instructions": [i.text for i in session.instructions],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def commit_step(self, session: Session, index: int, snapshot: SceneProgram,
                    delta: SceneDelta, transcript: TranscriptEntry,
                    instructions: list[Instruction]):
        """Persist one new instruction's artifacts, manifest last."""
        root = self.session_dir(session.id)
        self._write_text(root / f"snapshot_{index:05d}.yaml", program_to_yaml(snapshot))
        self._write_text(root / f"delta_{index:05d}.json",
                         json.dumps(delta.to_plain(), indent=2, sort_keys=True) + "\n")
        self._write_text(root / f"transcript_{index:05d}.json",
                         json.dumps(transcript.to_plain(), indent=2, sort_keys=True) + "\n")
        staged = Session(
            id=session.id, config=session.config, registry=session.registry,
            instructions=instructions,
        )
        self._write_text(root / "session.json", self._manifest(staged))

    def commit_manifest(self, session: Session):
        self._write_text(self.session_dir(session.id) / "session.json", self._manifest(session))

    def load(self, session_id: str) -> Session:
        root = self.session_dir(session_id)
        manifest_path = root / "session.json"
        if not manifest_path.is_file():
            raise UnknownSession(f"no session {session_id!r}")
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        if doc.get("format") != SESSION_FORMAT_VERSION:
            raise SessionError(f"{manifest_path}: unsupported session format")
        config = SessionConfig.from_plain(doc["config"])
        registry = load_config_registry(config)
        session = Session(id=doc["id"], config=config, registry=registry)
        for k, text in enumerate(doc["instructions"]):
            session.instructions.append(make_instruction(k, text))
            session.snapshots.append(
                program_from_yaml((root / f"snapshot_{k:05d}.yaml").read_text(encoding="utf-8"))
            )
            session.deltas.append(SceneDelta.from_plain(
                json.loads((root / f"delta_{k:05d}.json").read_text(encoding="utf-8"))
            ))
            session.transcripts.append(TranscriptEntry.from_plain(
                json.loads((root / f"transcript_{k:05d}.json").read_text(encoding="utf-8"))
            ))
        return session


def audit(session: Session):
    """Re-check the session invariants; raises SessionError on any break."""
    n = len(session.instructions)
    if not (len(session.snapshots) == len(session.deltas) == len(session.transcripts) == n):
        raise SessionError("history lists disagree on length")
    expected_version = session.registry.version_hash()
    program = session.base_program()
    for k in range(n):
        if session.instructions[k].index != k:
            raise SessionError(f"instruction {k} carries index {session.instructions[k].index}")
        if session.deltas[k].instruction_index != k:
            raise SessionError(f"delta {k} carries index {session.deltas[k].instruction_index}")
        program = apply_delta(program, session.deltas[k])
        if program != session.snapshots[k]:
            raise SessionError(f"snapshot {k} is not apply_delta(snapshot {k - 1}, delta {k})")
        if session.snapshots[k].registry_version != expected_version:
            raise SessionError(f"snapshot {k} was built against a different registry")


class SessionService:
    """All live sessions behind one API: create, submit, undo, inspect."""

    def __init__(self, data_dir: str | Path, store: SessionStore | None = None):
        self.store = store or SessionStore(data_dir)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- lifecycle ------------------------------------------------------

    def create_session(self, config: SessionConfig) -> Session:
        build_gateway(config)  # validates backend wiring up front
        registry = load_config_registry(config)
        session = Session(id=uuid.uuid4().hex[:12], config=config, registry=registry)
        self.store.commit_manifest(session)
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        return session

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self.store.load(session_id)
        with self._registry_lock:
            self._sessions.setdefault(session_id, session)
            self._locks.setdefault(session_id, threading.Lock())
            return self._sessions[session_id]

    def session_ids(self) -> list[str]:
        return self.store.session_ids()

    def status(self, session_id: str) -> str:
        self.get(session_id)
        lock = self._locks[session_id]
        if lock.acquire(blocking=False):
            lock.release()
            return STATUS_IDLE
        return STATUS_BUSY

    # -- mutations ------------------------------------------------------

    def submit_instruction(self, session_id: str, text: str) -> InstructionResult:
        session = self.get(session_id)
        lock = self._locks[session_id]
        if not lock.acquire(blocking=False):
            raise SessionBusy(f"session {session_id} already has an instruction in flight")
        try:
            index = len(session.instructions)
            instruction = make_instruction(index, text)
            gateway = build_gateway(session.config)
            before = session.current_program()
            delta, transcript = run_instruction(
                instruction, session.applied_functions(), session.registry, gateway,
                session.config.toggles,
            )
            after = apply_delta(before, delta)
            self.store.commit_step(
                session, index, after, delta, transcript,
                instructions=session.instructions + [instruction],
            )
            session.instructions.append(instruction)
            session.deltas.append(delta)
            session.snapshots.append(after)
            session.transcripts.append(transcript)
            return self._result(session, instruction.index, before, after,
                                plan=delta.plan.to_plain(), delta=delta.to_plain(),
                                failures=[f.to_plain() for f in delta.failures])
        finally:
            lock.release()

    def undo(self, session_id: str) -> InstructionResult:
        session = self.get(session_id)
        lock = self._locks[session_id]
        if not lock.acquire(blocking=False):
            raise SessionBusy(f"session {session_id} already has an instruction in flight")
        try:
            if not session.instructions:
                raise NothingToUndo(f"session {session_id} has no instruction to undo")
            before = session.current_program()
            staged = Session(
                id=session.id, config=session.config, registry=session.registry,
                instructions=session.instructions[:-1],
            )
            self.store.commit_manifest(staged)
            removed = session.instructions.pop()
            session.deltas.pop()
            session.snapshots.pop()
            session.transcripts.pop()
            after = session.current_program()
            return self._result(session, removed.index, before, after,
                                plan=None, delta=None, failures=[])
        finally:
            lock.release()

    def _result(self, session: Session, index: int, before: SceneProgram,
                after: SceneProgram, plan, delta, failures) -> InstructionResult:
        diff = diff_programs(before, after)
        graph = build_scene(after)
        return InstructionResult(
            session_id=session.id,
            instruction_index=index,
            status=STATUS_IDLE,
            plan=plan,
            delta=delta,
            diff=diff.to_plain(),
            diff_summary=diff.summary_lines(),
            failures=failures,
            scene=graph.to_plain(),
        )

    # -- read surfaces ----------------------------------------------------

    def describe(self, session_id: str) -> dict:
        session = self.get(session_id)
        program = session.current_program()
        return {
            "id": session.id,
            "status": self.status(session_id),
            "config": session.config.to_plain(),
            "instructions": [i.text for i in session.instructions],
            "instruction_count": len(session.instructions),
            "program_hash": program.content_hash(),
            "functions": list(program.function_names()),
            "failure_count": sum(len(t.failures) for t in session.transcripts),
        }

    def scene_document(self, session_id: str) -> str:
        session = self.get(session_id)
        return export_scene_json(build_scene(session.current_program()))

    def script(self, session_id: str) -> str:
        session = self.get(session_id)
        return emit_blender_script(session.current_program())

    def transcript(self, session_id: str) -> list[dict]:
        session = self.get(session_id)
        return [t.to_plain() for t in session.transcripts]

    def metrics_summary(self, session_id: str) -> dict:
        from .metrics import (
            MetricsError,
            alignment_proxy,
            failure_rate,
            modeling_call_count,
            observations_from_program,
            shannon_diversity,
        )

        session = self.get(session_id)
        transcripts = session.transcripts
        program = session.current_program()
        doc = build_scene(program).to_plain()
        try:
            rate = failure_rate(transcripts)
        except MetricsError:
            rate = None
        text = " ".join(i.text for i in session.instructions)
        return {
            "failure_rate": rate,
            "modeling_calls": modeling_call_count(transcripts),
            "diversity": shannon_diversity(observations_from_program(program, session.registry)),
            "alignment": alignment_proxy(text, doc) if text else 0.0,
            "instruction_count": len(session.instructions),
        }
