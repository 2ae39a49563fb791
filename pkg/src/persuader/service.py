"""WebSocket session service and wire protocol.

One WebSocket endpoint, ``/session``, speaks a small JSON protocol, one
message per frame:

  client -> server   {"type": "start", "pack": str, "seed": uint64?,
                      "profile": "open_minded" | "neutral" | "random"}
                     {"type": "choice", "session": str, "option": str}
  server -> client   {"type": "utterance", "session": str, "seq": int,
                      "function": str, "scene": str, "technique": str?,
                      "text": str, "options": [{"id": str, "label": str}]}
                     {"type": "end", "session": str, "summary": {...}}
                     {"type": "error", "code": str, "message": str}

``seq`` numbers the utterance messages of a session contiguously from 0, so
clients can detect drops.  ``options`` is empty for non-question acts.  The
engine runs in process; each session takes one message at a time (a second
in-flight message is rejected with code "busy").
"""

from __future__ import annotations

import json
import secrets
import threading
import time
import uuid
from pathlib import Path
from typing import Literal, Optional, Union

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from .dialogue import DialogueAct
from .pack import ContentPack, load_pack
from .session import SessionError, SessionRuntime, TranscriptWriter

MAX_SEED = 2**64 - 1


class StartMessage(BaseModel):
    type: Literal["start"]
    pack: str
    seed: Optional[int] = Field(default=None, ge=0, le=MAX_SEED)
    profile: Literal["open_minded", "neutral", "random"] = "random"


class ChoiceMessage(BaseModel):
    type: Literal["choice"]
    session: str
    option: str


ClientMessage = Union[StartMessage, ChoiceMessage]
_client_message = TypeAdapter(ClientMessage)


class OptionPayload(BaseModel):
    id: str
    label: str


class UtteranceMessage(BaseModel):
    type: Literal["utterance"] = "utterance"
    session: str
    seq: int
    function: str
    scene: str
    technique: Optional[str] = None
    text: str
    options: list[OptionPayload] = Field(default_factory=list)


class EndMessage(BaseModel):
    type: Literal["end"] = "end"
    session: str
    summary: dict


class ErrorMessage(BaseModel):
    type: Literal["error"] = "error"
    code: str
    message: str


class ManagedSession:
    """A runtime plus the service-side bookkeeping around it."""

    def __init__(self, session_id: str, runtime: SessionRuntime):
        self.id = session_id
        self.runtime = runtime
        self.created_at = time.time()
        self.lock = threading.Lock()
        self.utterance_seq = 0

    def messages_for(self, acts: list[DialogueAct], pack: ContentPack) -> list[BaseModel]:
        out: list[BaseModel] = []
        for act in acts:
            options = []
            if act.question is not None:
                _, question = pack.question(act.question)
                options = [OptionPayload(id=o.id, label=o.label) for o in question.options]
            out.append(
                UtteranceMessage(
                    session=self.id,
                    seq=self.utterance_seq,
                    function=act.function.value,
                    scene=act.scene,
                    technique=act.technique.value if act.technique else None,
                    text=act.utterance,
                    options=options,
                )
            )
            self.utterance_seq += 1
        if self.runtime.is_complete:
            out.append(EndMessage(session=self.id, summary=self.runtime.summary()))
        return out


def create_app(
    pack: Union[ContentPack, str, Path],
    transcripts_dir: Optional[Union[str, Path]] = None,
    static_dir: Optional[Union[str, Path]] = None,
) -> FastAPI:
    if not isinstance(pack, ContentPack):
        pack = load_pack(Path(pack))
    app = FastAPI(title="persuader session service")
    app.state.pack = pack
    app.state.sessions = {}
    app.state.transcripts_dir = Path(transcripts_dir) if transcripts_dir else None

    def start_session(message: StartMessage) -> tuple[Optional[ManagedSession], list[BaseModel]]:
        if message.pack != pack.id:
            return None, [ErrorMessage(code="unknown_pack", message=f"no pack {message.pack!r} loaded")]
        seed = message.seed if message.seed is not None else secrets.randbits(63)
        session_id = uuid.uuid4().hex
        sink = None
        if app.state.transcripts_dir is not None:
            sink = TranscriptWriter(app.state.transcripts_dir / f"{session_id}.jsonl")
        runtime = SessionRuntime(pack, seed=seed, profile=message.profile, sink=sink)
        managed = ManagedSession(session_id, runtime)
        app.state.sessions[session_id] = managed
        return managed, managed.messages_for(runtime.start(), pack)

    def handle_choice(message: ChoiceMessage) -> list[BaseModel]:
        managed = app.state.sessions.get(message.session)
        if managed is None:
            return [ErrorMessage(code="unknown_session", message=f"no session {message.session!r}")]
        if not managed.lock.acquire(blocking=False):
            return [ErrorMessage(code="busy", message="session has a message in flight")]
        try:
            acts = managed.runtime.submit(message.option)
            return managed.messages_for(acts, pack)
        except SessionError as exc:
            return [ErrorMessage(code=exc.code, message=str(exc))]
        finally:
            managed.lock.release()

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    parsed = _client_message.validate_python(json.loads(raw))
                except (json.JSONDecodeError, ValidationError) as exc:
                    await ws.send_text(
                        ErrorMessage(code="bad_message", message=str(exc)).model_dump_json()
                    )
                    continue
                if isinstance(parsed, StartMessage):
                    _, replies = start_session(parsed)
                else:
                    replies = handle_choice(parsed)
                for reply in replies:
                    await ws.send_text(reply.model_dump_json())
        except WebSocketDisconnect:
            pass

    static_path = Path(static_dir) if static_dir else None
    if static_path is not None and static_path.is_dir():
        app.mount("/", StaticFiles(directory=static_path, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<!doctype html><title>persuader</title>"
                "<p>Session service is running. The chat client is not built; "
                "connect a WebSocket client to <code>/session</code>.</p>"
            )

    return app
