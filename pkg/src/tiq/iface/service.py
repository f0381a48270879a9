"""HTTP service exposing learning sessions to external answerers.

Each session wraps a resumable learner run; the pending membership query
is served as a wire instance and advanced by posted yes/no answers.
Session state is in-memory, serialised per session, and expires after a
configurable idle time.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..learn import Limits, start_session, session_step
from .wire import WireError, decode_signature, encode_session


class CreateSession(BaseModel):
    cls: str = Field(alias="class")
    signature: dict
    n: Optional[int] = None
    limits: Optional[dict] = None

    model_config = {"populate_by_name": True}


class Answer(BaseModel):
    value: bool


class _Entry:
    def __init__(self, session):
        self.session = session
        self.asked: list = []
        self.lock = threading.Lock()
        self.touched = time.monotonic()


def create_app(idle_ttl: float = 3600.0, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="temporal-query oracle sessions")
    store: dict[str, _Entry] = {}
    store_lock = threading.Lock()

    def _purge() -> None:
        now = time.monotonic()
        with store_lock:
            for sid in [s for s, e in store.items() if now - e.touched > idle_ttl]:
                del store[sid]

    def _get(sid: str) -> _Entry:
        _purge()
        with store_lock:
            entry = store.get(sid)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown session")
        entry.touched = time.monotonic()
        return entry

    @app.post("/api/sessions", status_code=201)
    def create(body: CreateSession):
        try:
            sig = decode_signature(body.signature)
        except WireError as err:
            raise HTTPException(status_code=422, detail=str(err))
        limits = Limits(**body.limits) if body.limits else Limits()
        try:
            session = start_session(body.cls, sig, n=body.n, limits=limits)
        except (ValueError, TypeError) as err:
            raise HTTPException(status_code=422, detail=str(err))
        sid = uuid.uuid4().hex
        with store_lock:
            store[sid] = _Entry(session)
        return {"id": sid}

    @app.get("/api/sessions/{sid}")
    def state(sid: str):
        entry = _get(sid)
        with entry.lock:
            return encode_session(entry.session, sid, entry.asked)

    @app.post("/api/sessions/{sid}/answer")
    def answer(sid: str, body: Answer):
        entry = _get(sid)
        with entry.lock:
            session = entry.session
            if session.phase in ("done", "failed") or session.pending is None:
                raise HTTPException(status_code=409, detail="session is not awaiting an answer")
            entry.asked.append((session.pending, body.value))
            entry.session = session_step(session, body.value)
            return encode_session(entry.session, sid, entry.asked)

    @app.delete("/api/sessions/{sid}", status_code=204)
    def remove(sid: str):
        _get(sid)
        with store_lock:
            store.pop(sid, None)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(host: str = "127.0.0.1", port: int = 8000,
          idle_ttl: float = 3600.0, static_dir: Optional[str] = None) -> None:
    import uvicorn

    uvicorn.run(create_app(idle_ttl, static_dir), host=host, port=port)
