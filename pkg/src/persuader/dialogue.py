"""Information-State dialogue management: user model, needs, update rules.

The session state tracks what the agent believes about the user (knowledge
and intention per topic), the six motivational needs, the scene position and
the full event history.  Needs are re-derived from the state before every
agent turn; an unsatisfied need is what makes the agent act.  Act selection
itself is compiled to kernel productions in :mod:`persuader.policy`.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .model import (
    NEED_CATEGORY,
    CommunicativeFunction,
    EthicalProfile,
    Level,
    NeedCategory,
    NeedKind,
    PersuasiveTechnique,
    QuestionKind,
)
from .pack import AnswerOption, ContentPack


class ProtocolError(Exception):
    """A reply that does not belong to the pending question."""


class SceneIncompleteError(Exception):
    """advance_scene called while the current scene still has work to do."""


@dataclass
class Need:
    kind: NeedKind
    category: NeedCategory
    current_value: float = 1.0
    expected_value: float = 1.0

    @property
    def satisfied(self) -> bool:
        return self.current_value >= self.expected_value

    def set_satisfied(self, satisfied: bool) -> None:
        self.current_value = 1.0 if satisfied else 0.0
        self.expected_value = 1.0


@dataclass
class TopicState:
    topic: str
    knowledge: Level = Level.LOW
    intention: Level = Level.LOW
    argued: bool = False
    exception_issued: bool = False
    substitution_issued: bool = False


@dataclass
class DialogueAct:
    """One agent move: a communicative function with its rendered utterance."""

    function: CommunicativeFunction
    scene: str
    fulfils: NeedKind
    utterance: str
    topic: Optional[str] = None
    technique: Optional[PersuasiveTechnique] = None
    options: tuple[str, ...] = ()  # answer option ids; questions only
    question: Optional[str] = None  # question id; questions only


@dataclass
class ActRecord:
    """History entry for an emitted agent act."""

    function: CommunicativeFunction
    scene: str
    fulfils: NeedKind
    utterance: str
    topic: Optional[str] = None
    technique: Optional[PersuasiveTechnique] = None
    options: tuple[str, ...] = ()
    question: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "kind": "act",
            "function": self.function.value,
            "scene": self.scene,
            "fulfils": self.fulfils.value,
            "utterance": self.utterance,
            "topic": self.topic,
            "technique": self.technique.value if self.technique else None,
            "options": list(self.options),
            "question": self.question,
        }


@dataclass
class ReplyRecord:
    """History entry for a user answer to the pending question."""

    question: str
    question_kind: QuestionKind
    topic: str
    option: str
    effects: Mapping[str, str]

    def to_dict(self) -> dict:
        return {
            "kind": "reply",
            "question": self.question,
            "question_kind": self.question_kind.value,
            "topic": self.topic,
            "option": self.option,
            "effects": dict(self.effects),
        }


HistoryEntry = Union[ActRecord, ReplyRecord]


@dataclass
class InformationState:
    topic_states: dict[str, TopicState]
    needs: dict[NeedKind, Need]
    current_scene: str
    previous_scene: Optional[str] = None
    ethical_profile: EthicalProfile = EthicalProfile.NEUTRAL
    active_role: Optional[str] = None
    history: list[HistoryEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "topic_states": {
                t: {
                    "knowledge": ts.knowledge.value,
                    "intention": ts.intention.value,
                    "argued": ts.argued,
                    "exception_issued": ts.exception_issued,
                    "substitution_issued": ts.substitution_issued,
                }
                for t, ts in sorted(self.topic_states.items())
            },
            "needs": {
                k.value: {
                    "category": n.category.value,
                    "current_value": n.current_value,
                    "expected_value": n.expected_value,
                }
                for k, n in sorted(self.needs.items())
            },
            "current_scene": self.current_scene,
            "previous_scene": self.previous_scene,
            "ethical_profile": self.ethical_profile.value,
            "active_role": self.active_role,
            "history": [e.to_dict() for e in self.history],
        }


def state_digest(state: InformationState) -> str:
    canonical = json.dumps(state.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- history predicates -------------------------------------------------------


def acts(state: InformationState) -> Iterable[ActRecord]:
    return (e for e in state.history if isinstance(e, ActRecord))


def replies(state: InformationState) -> Iterable[ReplyRecord]:
    return (e for e in state.history if isinstance(e, ReplyRecord))


def greeting_emitted(state: InformationState) -> bool:
    return any(a.function == CommunicativeFunction.GREETING_SELF_INTRODUCTION for a in acts(state))


def goodbye_emitted(state: InformationState) -> bool:
    return any(a.function == CommunicativeFunction.GOODBYE for a in acts(state))


def question_answered(state: InformationState, kind: QuestionKind, topic: str) -> bool:
    return any(r.question_kind == kind and r.topic == topic for r in replies(state))


def informed(state: InformationState, topic: str) -> bool:
    return any(
        a.function == CommunicativeFunction.INFORM and a.topic == topic for a in acts(state)
    )


def knowledge_responded(state: InformationState, topic: str) -> bool:
    """An inform/reinforce/acknowledge act answered the knowledge assessment."""
    response_functions = (
        CommunicativeFunction.INFORM,
        CommunicativeFunction.REINFORCE,
        CommunicativeFunction.ACKNOWLEDGE,
    )
    return any(
        a.function in response_functions and a.topic == topic and a.fulfils == NeedKind.COMPETENCE
        for a in acts(state)
    )


def climax_closed(state: InformationState, topic: str) -> bool:
    """The conflict was answered: by a substitution or by a closing acknowledge."""
    for a in acts(state):
        if a.topic != topic:
            continue
        if a.function == CommunicativeFunction.SUBSTITUTION:
            return True
        if a.function == CommunicativeFunction.ACKNOWLEDGE and a.fulfils == NeedKind.CLIMAX:
            return True
    return False


def pending_question(state: InformationState) -> Optional[ActRecord]:
    """The question act awaiting an answer, if any."""
    for entry in reversed(state.history):
        if isinstance(entry, ReplyRecord):
            return None
        if entry.function == CommunicativeFunction.QUESTION:
            return entry
    return None


# --- operations ---------------------------------------------------------------


def init_state(
    pack: ContentPack,
    profile_choice: str = "random",
    rng: Optional[random.Random] = None,
) -> InformationState:
    """Fresh session state: introduction scene, everything unassessed.

    The ethical profile is fixed here for the whole session; with
    ``profile_choice="random"`` it is drawn open-minded or neutral with
    probability 0.5 each from the session stream.
    """
    if profile_choice == "random":
        if rng is None:
            raise ValueError("profile_choice='random' needs an rng")
        profile = EthicalProfile.OPEN_MINDED if rng.random() < 0.5 else EthicalProfile.NEUTRAL
    else:
        profile = EthicalProfile(profile_choice)
    needs = {kind: Need(kind, NEED_CATEGORY[kind]) for kind in NeedKind}
    needs[NeedKind.SOCIAL_AFFILIATION].set_satisfied(False)
    return InformationState(
        topic_states={t: TopicState(t) for t in pack.topics},
        needs=needs,
        current_scene=pack.scenes[0].id,
        ethical_profile=profile,
    )


def emerge_needs(state: InformationState, pack: ContentPack) -> InformationState:
    """Re-derive the satisfaction of all six needs from the current state."""
    scene = pack.scene(state.current_scene)
    topic = scene.topic
    ts = state.topic_states.get(topic) if topic else None

    state.needs[NeedKind.SOCIAL_AFFILIATION].set_satisfied(greeting_emitted(state))

    competence_open = topic is not None and not question_answered(
        state, QuestionKind.KNOWLEDGE_PROBE, topic
    )
    state.needs[NeedKind.COMPETENCE].set_satisfied(not competence_open)

    intent_open = topic is not None and not question_answered(
        state, QuestionKind.INTENTION_PROBE, topic
    )
    state.needs[NeedKind.INTENTIONAL_ASSESSMENT].set_satisfied(not intent_open)

    argumentation_open = ts is not None and ts.intention == Level.LOW and not ts.argued
    state.needs[NeedKind.ARGUMENTATION].set_satisfied(not argumentation_open)

    climax_open = (
        ts is not None
        and scene.climax_capable
        and (ts.argued or informed(state, topic))
        and not ts.exception_issued
    )
    state.needs[NeedKind.CLIMAX].set_satisfied(not climax_open)

    open_mindedness_open = (
        ts is not None
        and state.ethical_profile == EthicalProfile.OPEN_MINDED
        and ts.exception_issued
        and question_answered(state, QuestionKind.ROLE_REASSESSMENT, topic)
        and ts.intention == Level.LOW
        and not ts.substitution_issued
    )
    state.needs[NeedKind.OPEN_MINDEDNESS].set_satisfied(not open_mindedness_open)
    return state


def unsatisfied_needs(state: InformationState) -> list[NeedKind]:
    return [k for k, n in state.needs.items() if not n.satisfied]


def apply_user_reply(
    state: InformationState,
    option: Union[str, AnswerOption],
    pack: ContentPack,
) -> InformationState:
    """Apply an answer's declared effects under the pending question.

    Raises ProtocolError (leaving the state untouched) when the option does
    not belong to the question act most recently emitted.
    """
    pending = pending_question(state)
    if pending is None:
        raise ProtocolError("no question is pending")
    option_id = option.id if isinstance(option, AnswerOption) else option
    if option_id not in pending.options:
        raise ProtocolError(
            f"option {option_id!r} does not belong to pending question {pending.question!r}"
        )
    found = pack.question(pending.question)
    if found is None:
        raise ProtocolError(f"pending question {pending.question!r} is not in the pack")
    scene, question = found
    answer = question.option(option_id)
    topic = scene.topic
    ts = state.topic_states[topic]
    if "knowledge" in answer.effects:
        ts.knowledge = Level(answer.effects["knowledge"])
    if "intention" in answer.effects:
        ts.intention = Level(answer.effects["intention"])
    state.history.append(
        ReplyRecord(
            question=question.id,
            question_kind=question.kind,
            topic=topic,
            option=option_id,
            effects={k: v for k, v in answer.effects.items() if k != "topic"},
        )
    )
    return state


def advance_scene(state: InformationState, pack: ContentPack) -> InformationState:
    """Move to the next scene in pack order; the current one must be done."""
    emerge_needs(state, pack)
    open_needs = unsatisfied_needs(state)
    if open_needs:
        raise SceneIncompleteError(
            f"cannot leave scene {state.current_scene}: unsatisfied needs {open_needs}"
        )
    if pending_question(state) is not None:
        raise SceneIncompleteError(
            f"cannot leave scene {state.current_scene}: a question is pending"
        )
    next_scene = pack.next_scene(state.current_scene)
    if next_scene is None:
        raise SceneIncompleteError("already in the final scene")
    state.previous_scene = state.current_scene
    state.current_scene = next_scene
    state.active_role = None
    return state


def is_complete(state: InformationState) -> bool:
    return goodbye_emitted(state)
