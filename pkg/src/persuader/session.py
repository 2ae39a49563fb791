"""Session runtime: seeding, the agent loop, transcripts and replay.

A session owns one information state, one kernel and one seeded random
stream.  The agent runs ahead after every user event, batching consecutive
acts into a burst that ends at a question (user input needed) or at the
goodbye.  Every event appends a transcript entry carrying a digest of the
information state, so a persisted transcript can be replayed bit-for-bit:
same pack, seed, profile and choices reproduce every digest.

Transcript files are JSON Lines: one header line (pack id/version, seed,
profile) followed by one line per entry, appended as events happen.  The
lines contain nothing non-deterministic (no timestamps, no session ids), so
two runs with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Callable, Optional, Union

from .dialogue import (
    DialogueAct,
    InformationState,
    advance_scene,
    apply_user_reply,
    emerge_needs,
    init_state,
    is_complete,
    state_digest,
)
from .kernel import Chunk
from .model import CommunicativeFunction
from .pack import ContentPack
from .policy import build_session_kernel, select_act

_MAX_EVENTS = 500  # hard stop against runaway loops from a broken policy


class SessionError(Exception):
    code = "session_error"


class SessionEndedError(SessionError):
    code = "session_ended"


class StaleOptionError(SessionError):
    """The option does not belong to the currently pending question."""

    code = "stale_option"


class ReplayMismatchError(SessionError):
    code = "replay_mismatch"


Sink = Callable[[dict], None]


class SessionRuntime:
    """One dialogue session driven end to end in process."""

    def __init__(
        self,
        pack: ContentPack,
        seed: int,
        profile: str = "random",
        sink: Optional[Sink] = None,
    ):
        self.pack = pack
        self.seed = int(seed)
        self.profile_choice = profile
        self.rng = random.Random(self.seed)
        self.kernel = build_session_kernel(pack, self.rng)
        self.state: InformationState = init_state(pack, profile, self.rng)
        self.entries: list[dict] = []
        self.pending_act: Optional[DialogueAct] = None
        self._sink = sink
        self._started = False
        header = {
            "kind": "header",
            "pack": pack.id,
            "version": pack.version,
            "seed": self.seed,
            "profile": profile,
            "resolved_profile": self.state.ethical_profile.value,
        }
        self.header = header
        if self._sink:
            self._sink(header)

    # -- the agent loop -------------------------------------------------------

    def start(self) -> list[DialogueAct]:
        """Run the opening burst (greeting up to the first question)."""
        if self._started:
            raise SessionError("session already started")
        self._started = True
        return self._run_agent()

    def submit(self, option_id: str) -> list[DialogueAct]:
        """Apply one user choice and run the agent to the next stop."""
        if not self._started:
            raise SessionError("session not started")
        if self.is_complete:
            raise SessionEndedError("session already ended")
        if self.pending_act is None or option_id not in self.pending_act.options:
            raise StaleOptionError(f"option {option_id!r} is not answerable now")
        question = self.pending_act
        self.kernel.set_buffer(
            "aural",
            Chunk(
                id=f"aural:{len(self.state.history)}",
                chunk_type="answer",
                slots={"option": option_id, "question": question.question or ""},
            ),
        )
        apply_user_reply(self.state, option_id, self.pack)
        self.pending_act = None
        reply = self.state.history[-1]
        self._record("user", reply.to_dict(), need=None)
        return self._run_agent()

    def _run_agent(self) -> list[DialogueAct]:
        acts: list[DialogueAct] = []
        while len(self.entries) < _MAX_EVENTS:
            if is_complete(self.state):
                break
            emerge_needs(self.state, self.pack)
            act = select_act(self.state, self.pack, self.rng, self.kernel)
            if act is None:
                advance_scene(self.state, self.pack)
                continue
            acts.append(act)
            self._record("agent", self.state.history[-1].to_dict(), need=act.fulfils.value)
            if act.function == CommunicativeFunction.QUESTION:
                self.pending_act = act
                break
        return acts

    def _record(self, direction: str, payload: dict, need: Optional[str]) -> None:
        entry = {
            "kind": "entry",
            "seq": len(self.entries),
            "direction": direction,
            "payload": payload,
            "need": need,
            "digest": state_digest(self.state),
        }
        self.entries.append(entry)
        if self._sink:
            self._sink(entry)

    # -- results ----------------------------------------------------------------

    @property
    def is_complete(self) -> bool:
        return is_complete(self.state)

    def summary(self) -> dict:
        return {
            "per_topic": {
                t: {"knowledge": ts.knowledge.value, "intention": ts.intention.value}
                for t, ts in sorted(self.state.topic_states.items())
            }
        }

    def transcript(self) -> list[dict]:
        return [self.header, *self.entries]


def transcript_to_text(transcript: list[dict]) -> str:
    return "".join(json.dumps(line, sort_keys=True) + "\n" for line in transcript)


def write_transcript(transcript: list[dict], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(transcript_to_text(transcript), encoding="utf-8")
    return path


def read_transcript(path: Union[str, Path]) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


class TranscriptWriter:
    """Append-only per-session JSONL sink."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")

    def __call__(self, line: dict) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(line, sort_keys=True) + "\n")


def user_choices(transcript: list[dict]) -> list[str]:
    return [
        e["payload"]["option"]
        for e in transcript
        if e.get("kind") == "entry" and e["direction"] == "user"
    ]


def replay_transcript(
    transcript: Union[list[dict], str, Path],
    pack: ContentPack,
) -> SessionRuntime:
    """Re-run the engine from a transcript and verify every state digest.

    Raises ReplayMismatchError at the first diverging entry.
    """
    if not isinstance(transcript, list):
        transcript = read_transcript(transcript)
    header = transcript[0]
    if header.get("kind") != "header":
        raise ReplayMismatchError("transcript has no header line")
    if header["pack"] != pack.id or header["version"] != pack.version:
        raise ReplayMismatchError(
            f"transcript was recorded against pack {header['pack']}/{header['version']}, "
            f"not {pack.id}/{pack.version}"
        )
    runtime = SessionRuntime(pack, seed=header["seed"], profile=header["profile"])
    runtime.start()
    for option in user_choices(transcript):
        runtime.submit(option)
    recorded = [e for e in transcript if e.get("kind") == "entry"]
    if len(recorded) != len(runtime.entries):
        raise ReplayMismatchError(
            f"replay produced {len(runtime.entries)} entries, transcript has {len(recorded)}"
        )
    for want, got in zip(recorded, runtime.entries):
        if want["digest"] != got["digest"]:
            raise ReplayMismatchError(f"digest mismatch at seq {want['seq']}")
        if want != got:
            raise ReplayMismatchError(f"entry mismatch at seq {want['seq']}")
    return runtime
