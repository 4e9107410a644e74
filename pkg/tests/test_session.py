"""Sessions: durable history, undo, locking, and the chain audit."""

from __future__ import annotations

import json

import pytest

from scenestudio.agents import Toggles
from scenestudio.codegen import program_to_yaml
from scenestudio.session import (
    NothingToUndo,
    SessionBusy,
    SessionConfig,
    SessionError,
    SessionService,
    SessionStore,
    UnknownSession,
    audit,
)

MEADOW = "a meadow with white flowers and pine trees"
WINTER = "translate the scene into a winter setting"


@pytest.fixture()
def service(tmp_path):
    return SessionService(tmp_path / "data")


def _mock(seed=0, **kwargs):
    return SessionConfig(backend="mock", seed=seed, **kwargs)


# ---------------------------------------------------------------------------
# lifecycle
# ---------------------------------------------------------------------------


def test_create_session_persists_a_manifest(service):
    session = service.create_session(_mock(seed=42))
    assert len(session.id) == 12
    manifest = service.store.session_dir(session.id) / "session.json"
    doc = json.loads(manifest.read_text())
    assert doc["id"] == session.id
    assert doc["config"]["seed"] == 42
    assert doc["instructions"] == []
    assert service.status(session.id) == "idle"
    assert service.session_ids() == [session.id]


def test_config_rejects_unknown_backend():
    with pytest.raises(SessionError):
        SessionConfig(backend="oracle")


def test_replay_backend_requires_an_existing_cassette(service, tmp_path):
    config = SessionConfig(backend="replay", cassette_path=str(tmp_path / "missing.json"))
    with pytest.raises(SessionError):
        service.create_session(config)


def test_get_unknown_session(service):
    with pytest.raises(UnknownSession):
        service.get("nope")
    with pytest.raises(UnknownSession):
        service.submit_instruction("nope", MEADOW)


def test_config_roundtrips_through_plain():
    config = _mock(seed=9, toggles=Toggles(skip_enrichment=True))
    assert SessionConfig.from_plain(config.to_plain()) == config


# ---------------------------------------------------------------------------
# submit
# ---------------------------------------------------------------------------


def test_submit_builds_a_snapshot_and_reports_the_diff(service):
    session = service.create_session(_mock(seed=42))
    result = service.submit_instruction(session.id, MEADOW)
    assert result.instruction_index == 0
    assert result.status == "idle"
    assert result.plan is not None and result.plan["selected"]
    assert result.diff_summary != ["(no changes)"]
    assert result.scene["node_count"] > 0
    assert len(session.snapshots) == 1
    assert session.snapshots[0].function_names() == tuple(session.registry.names())
    audit(session)


def test_submit_result_plain_shape(service):
    session = service.create_session(_mock())
    plain = service.submit_instruction(session.id, MEADOW).to_plain()
    assert set(plain) == {
        "session_id", "instruction_index", "status", "plan", "delta",
        "diff", "diff_summary", "failures", "scene",
    }
    assert json.loads(json.dumps(plain)) == plain


def test_follow_up_edits_touch_only_selected_functions(service):
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    before = session.current_program()
    result = service.submit_instruction(session.id, WINTER)
    after = session.current_program()
    selected = set(result.plan["selected"])
    assert "add_snow_layer" in selected
    previous = {c.binding.function: c.binding for c in before.calls}
    for call in after.calls:
        if call.binding.function not in selected:
            assert call.binding is previous[call.binding.function]
    audit(session)


def test_each_submit_gets_the_next_index(service):
    session = service.create_session(_mock())
    for k, text in enumerate([MEADOW, WINTER, "add fog"]):
        result = service.submit_instruction(session.id, text)
        assert result.instruction_index == k
    assert [i.index for i in session.instructions] == [0, 1, 2]
    assert [d.instruction_index for d in session.deltas] == [0, 1, 2]


# ---------------------------------------------------------------------------
# undo
# ---------------------------------------------------------------------------


def test_undo_restores_the_previous_snapshot_exactly(service):
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    snapshot0 = session.snapshots[0]
    service.submit_instruction(session.id, WINTER)
    assert session.current_program() != snapshot0
    result = service.undo(session.id)
    assert result.instruction_index == 1
    assert session.current_program() == snapshot0
    assert program_to_yaml(session.current_program()) == program_to_yaml(snapshot0)
    assert len(session.instructions) == 1
    audit(session)


def test_undo_to_empty_and_below(service):
    session = service.create_session(_mock())
    service.submit_instruction(session.id, MEADOW)
    result = service.undo(session.id)
    assert result.instruction_index == 0
    assert session.current_program() == session.base_program()
    assert result.scene["node_count"] == 0
    with pytest.raises(NothingToUndo):
        service.undo(session.id)


def test_undo_is_durable(service, tmp_path):
    session = service.create_session(_mock(seed=1))
    service.submit_instruction(session.id, MEADOW)
    service.submit_instruction(session.id, WINTER)
    service.undo(session.id)
    reloaded = SessionService(service.store.data_dir).get(session.id)
    assert len(reloaded.instructions) == 1
    assert reloaded.current_program() == session.current_program()
    audit(reloaded)


def test_resubmit_after_undo_overwrites_the_orphan_files(service):
    session = service.create_session(_mock(seed=1))
    service.submit_instruction(session.id, MEADOW)
    service.undo(session.id)
    result = service.submit_instruction(session.id, "a foggy lake at dawn")
    assert result.instruction_index == 0
    reloaded = SessionService(service.store.data_dir).get(session.id)
    assert [i.text for i in reloaded.instructions] == ["a foggy lake at dawn"]
    assert reloaded.current_program() == session.current_program()
    audit(reloaded)


# ---------------------------------------------------------------------------
# persistence and audit
# ---------------------------------------------------------------------------


def test_sessions_reload_from_disk(service):
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    service.submit_instruction(session.id, WINTER)

    fresh = SessionService(service.store.data_dir)
    reloaded = fresh.get(session.id)
    assert [i.text for i in reloaded.instructions] == [MEADOW, WINTER]
    assert reloaded.snapshots == session.snapshots
    assert reloaded.deltas == session.deltas
    assert [t.to_plain() for t in reloaded.transcripts] == [
        t.to_plain() for t in session.transcripts]
    audit(reloaded)
    assert fresh.scene_document(session.id) == service.scene_document(session.id)
    assert fresh.script(session.id) == service.script(session.id)


def test_audit_rejects_a_tampered_snapshot(service):
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    service.submit_instruction(session.id, WINTER)
    audit(session)
    session.snapshots[1] = session.snapshots[0]
    with pytest.raises(SessionError):
        audit(session)


def test_audit_rejects_mismatched_lengths(service):
    session = service.create_session(_mock())
    service.submit_instruction(session.id, MEADOW)
    session.transcripts.pop()
    with pytest.raises(SessionError):
        audit(session)


class _FaultyStore(SessionStore):
    """Store that fails manifest rewrites on demand."""

    def __init__(self, data_dir):
        super().__init__(data_dir)
        self.fail_manifest = False

    def _write_text(self, path, text):
        if self.fail_manifest and path.name == "session.json":
            raise OSError("injected storage fault")
        super()._write_text(path, text)


def test_storage_fault_before_the_commit_point_changes_nothing(tmp_path):
    store = _FaultyStore(tmp_path / "data")
    service = SessionService(tmp_path / "data", store=store)
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)

    store.fail_manifest = True
    with pytest.raises(OSError):
        service.submit_instruction(session.id, WINTER)
    store.fail_manifest = False

    # in-memory state never advanced and the lock was released
    assert [i.text for i in session.instructions] == [MEADOW]
    assert service.status(session.id) == "idle"
    audit(session)
    # disk still shows one instruction; the orphan step files are untrusted
    reloaded = SessionService(tmp_path / "data").get(session.id)
    assert [i.text for i in reloaded.instructions] == [MEADOW]
    audit(reloaded)
    assert (store.session_dir(session.id) / "snapshot_00001.yaml").is_file()


# ---------------------------------------------------------------------------
# locking
# ---------------------------------------------------------------------------


def test_concurrent_submit_is_refused_not_queued(service):
    session = service.create_session(_mock())
    lock = service._locks[session.id]
    assert lock.acquire(blocking=False)
    try:
        assert service.status(session.id) == "busy"
        with pytest.raises(SessionBusy):
            service.submit_instruction(session.id, MEADOW)
        with pytest.raises(SessionBusy):
            service.undo(session.id)
    finally:
        lock.release()
    assert service.status(session.id) == "idle"
    service.submit_instruction(session.id, MEADOW)


# ---------------------------------------------------------------------------
# read surfaces
# ---------------------------------------------------------------------------


def test_describe_summarizes_the_session(service):
    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    doc = service.describe(session.id)
    assert doc["id"] == session.id
    assert doc["status"] == "idle"
    assert doc["instructions"] == [MEADOW]
    assert doc["instruction_count"] == 1
    assert doc["functions"] == list(session.current_program().function_names())
    assert doc["program_hash"] == session.current_program().content_hash()


def test_scene_document_and_script_render_the_current_program(service):
    from scenestudio.procgen import verify_scene_json

    session = service.create_session(_mock(seed=42))
    service.submit_instruction(session.id, MEADOW)
    assert verify_scene_json(service.scene_document(session.id))
    script = service.script(session.id)
    assert script.startswith("# scene script")
    assert "set_terrain(" in script


def test_transcript_lists_one_entry_per_instruction(service):
    session = service.create_session(_mock())
    service.submit_instruction(session.id, MEADOW)
    service.submit_instruction(session.id, WINTER)
    entries = service.transcript(session.id)
    assert [e["instruction_index"] for e in entries] == [0, 1]
    assert all(e["exchanges"] for e in entries)


def test_metrics_summary_handles_the_empty_session(service):
    session = service.create_session(_mock())
    summary = service.metrics_summary(session.id)
    assert summary == {
        "failure_rate": None, "modeling_calls": 0, "diversity": 0.0,
        "alignment": 0.0, "instruction_count": 0,
    }
    service.submit_instruction(session.id, MEADOW)
    summary = service.metrics_summary(session.id)
    assert summary["failure_rate"] == 0.0
    assert summary["modeling_calls"] > 0
    assert summary["diversity"] > 0.0
    assert summary["instruction_count"] == 1
