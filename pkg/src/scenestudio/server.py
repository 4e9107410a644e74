"""HTTP face of the session service.

Thin adapter: every route delegates to SessionService and maps its errors
to status codes (404 unknown session, 409 busy or nothing to undo, 400 bad
config). Pipeline failures are not HTTP errors: a submit that met failures
still returns 200 with the failures in the result body. When a built
frontend bundle exists it is served from the root path.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles

from .session import (
    NothingToUndo,
    SessionBusy,
    SessionConfig,
    SessionError,
    SessionService,
    UnknownSession,
)

FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


def create_app(data_dir: str | Path, frontend_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="scenestudio", docs_url=None, redoc_url=None)
    service = SessionService(data_dir)
    app.state.service = service

    def run(fn):
        try:
            return fn()
        except UnknownSession as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (SessionBusy, NothingToUndo) as e:
            raise HTTPException(status_code=409, detail=str(e))
        except SessionError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @app.post("/sessions")
    def create_session(payload: dict = Body(default={})):
        def go():
            config = SessionConfig.from_plain({
                "backend": payload.get("backend", "mock"),
                "seed": payload.get("seed", 0),
                "toggles": payload.get("toggles", {}),
                "registry_path": payload.get("registry_path"),
                "cassette_path": payload.get("cassette_path"),
            })
            session = service.create_session(config)
            return service.describe(session.id)

        return run(go)

    @app.post("/sessions/{session_id}/instructions")
    def submit_instruction(session_id: str, payload: dict = Body(...)):
        text = payload.get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(status_code=400, detail="payload needs a non-empty 'text'")
        return run(lambda: service.submit_instruction(session_id, text).to_plain())

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        return run(lambda: service.undo(session_id).to_plain())

    @app.get("/sessions/{session_id}")
    def describe(session_id: str):
        return run(lambda: service.describe(session_id))

    @app.get("/sessions/{session_id}/scene")
    def scene(session_id: str):
        text = run(lambda: service.scene_document(session_id))
        return Response(content=text, media_type="application/json")

    @app.get("/sessions/{session_id}/script")
    def script(session_id: str):
        text = run(lambda: service.script(session_id))
        return Response(content=text, media_type="text/x-python")

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        return run(lambda: service.transcript(session_id))

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        return run(lambda: service.metrics_summary(session_id))

    static_dir = frontend_dir if frontend_dir is not None else FRONTEND_DIST
    if static_dir.is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
