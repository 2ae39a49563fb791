"""Needs-driven persuasive dialogue engine.

A production-system kernel with activation-based retrieval drives an
Information-State dialogue manager whose six needs (social affiliation,
competence, intentional assessment, argumentation, climax, open-mindedness)
select the agent's dialogue acts; sessions run behind a WebSocket service,
a terminal REPL and a scripted simulation harness.
"""

from .dialogue import (
    DialogueAct,
    InformationState,
    Need,
    ProtocolError,
    TopicState,
    advance_scene,
    apply_user_reply,
    emerge_needs,
    init_state,
    is_complete,
    state_digest,
)
from .model import (
    CommunicativeFunction,
    EthicalProfile,
    Level,
    NeedKind,
    PersuasiveTechnique,
    QuestionKind,
)
from .pack import ContentPack, load_pack, render, serialize
from .policy import choose_technique, select_act
from .session import SessionRuntime, replay_transcript
from .sim import BatchReport, UserProfile, check_transcript, run_batch, simulate_session

__version__ = "0.1.0"

__all__ = [
    "BatchReport",
    "CommunicativeFunction",
    "ContentPack",
    "DialogueAct",
    "EthicalProfile",
    "InformationState",
    "Level",
    "Need",
    "NeedKind",
    "PersuasiveTechnique",
    "ProtocolError",
    "QuestionKind",
    "SessionRuntime",
    "TopicState",
    "UserProfile",
    "advance_scene",
    "apply_user_reply",
    "check_transcript",
    "choose_technique",
    "emerge_needs",
    "init_state",
    "is_complete",
    "load_pack",
    "render",
    "replay_transcript",
    "run_batch",
    "select_act",
    "serialize",
    "simulate_session",
    "state_digest",
    "__version__",
]
