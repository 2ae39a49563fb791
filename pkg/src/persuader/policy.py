"""The agent's act-selection policy, compiled to kernel productions.

Every agent turn the dialogue state is encoded as a goal chunk (scene,
topic reference, assessment flags, levels, profile) and the production
cycle picks the act.  Production priorities realize the need order
social affiliation > competence > intentional assessment > argumentation >
climax > open-mindedness, with the scripted follow-ups (knowledge response,
post-exception re-assessment, neutral climax closure) slotted in between.

The persuasive technique of an argument act is not scripted: it is drawn by
a noisy retrieval over the enabled technique chunks, all at equal base
activation, so the draw is uniform and fully determined by the session's
random stream.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .dialogue import (
    ActRecord,
    DialogueAct,
    InformationState,
    climax_closed,
    goodbye_emitted,
    greeting_emitted,
    informed,
    knowledge_responded,
    question_answered,
)
from .kernel import (
    ActivationParams,
    BufferMatch,
    Chunk,
    ChunkRef,
    EmitAct,
    KernelState,
    Production,
    RetrievalRequest,
    retrieve,
    step,
)
from .model import (
    CommunicativeFunction,
    NeedKind,
    PersuasiveTechnique,
    QuestionKind,
)
from .pack import ContentPack, render

YES, NO, NONE = "yes", "no", "none"

_MAX_CYCLE_STEPS = 8


class PolicyError(Exception):
    """The production cycle did something the dialogue contract forbids."""


def _rule(name, priority, guards, payload):
    guards = {"topic_id": "?t", **guards}
    return Production(
        name=name,
        conditions=[BufferMatch("goal", "conversation", guards)],
        actions=[EmitAct({"topic": "?t", **payload})],
        priority=priority,
    )


def build_productions() -> list[Production]:
    greet = Production(
        name="greet",
        conditions=[BufferMatch("goal", "conversation", {"scene_kind": "introduction", "greeted": NO})],
        actions=[EmitAct({"function": "greeting_self_introduction", "need": "social_affiliation"})],
        priority=100,
    )
    farewell = Production(
        name="farewell",
        conditions=[BufferMatch("goal", "conversation", {"scene_kind": "conclusion", "farewelled": NO})],
        actions=[EmitAct({"function": "goodbye", "need": "social_affiliation"})],
        priority=10,
    )
    topic_rules = [
        _rule(
            "respond-knowledge-low",
            90,
            {"scene_kind": "topic", "know_assessed": YES, "responded": NO, "knowledge": "low"},
            {"function": "inform", "need": "competence"},
        ),
        _rule(
            "respond-knowledge-medium",
            90,
            {"scene_kind": "topic", "know_assessed": YES, "responded": NO, "knowledge": "medium"},
            {"function": "reinforce", "need": "competence"},
        ),
        _rule(
            "respond-knowledge-high",
            90,
            {"scene_kind": "topic", "know_assessed": YES, "responded": NO, "knowledge": "high"},
            {"function": "acknowledge", "need": "competence"},
        ),
        _rule(
            "ask-knowledge",
            80,
            {"scene_kind": "topic", "know_assessed": NO},
            {"function": "question", "question_kind": "knowledge_probe", "need": "competence"},
        ),
        _rule(
            "ask-intention",
            70,
            {"scene_kind": "topic", "responded": YES, "intent_assessed": NO},
            {"function": "question", "question_kind": "intention_probe", "need": "intentional_assessment"},
        ),
        _rule(
            "argue",
            60,
            {"scene_kind": "topic", "intent_assessed": YES, "intention": "low", "argued": NO},
            {"function": "argument", "need": "argumentation"},
        ),
        _rule(
            "raise-exception",
            50,
            {
                "scene_kind": "topic",
                "climax_capable": YES,
                "intent_assessed": YES,
                "has_arg1": YES,
                "exception_issued": NO,
            },
            {"function": "exception", "need": "climax"},
        ),
        _rule(
            "reassess-role",
            45,
            {"scene_kind": "topic", "exception_issued": YES, "reassessed": NO},
            {"function": "question", "question_kind": "role_reassessment", "need": "intentional_assessment"},
        ),
        _rule(
            "substitute",
            40,
            {
                "scene_kind": "topic",
                "exception_issued": YES,
                "reassessed": YES,
                "intention": "low",
                "profile": "open_minded",
                "substituted": NO,
            },
            {"function": "substitution", "need": "open_mindedness"},
        ),
        _rule(
            "close-climax",
            38,
            {
                "scene_kind": "topic",
                "exception_issued": YES,
                "reassessed": YES,
                "intention": "low",
                "profile": "neutral",
                "closed": NO,
            },
            {"function": "acknowledge", "need": "climax"},
        ),
    ]
    return [greet, *topic_rules, farewell]


def technique_chunk(technique: PersuasiveTechnique) -> Chunk:
    return Chunk(
        id=f"technique:{technique.value}",
        chunk_type="technique",
        slots={"name": technique.value},
    )


def build_session_kernel(pack: ContentPack, rng: random.Random) -> KernelState:
    """Kernel with the policy productions and the pack's static chunks."""
    kernel = KernelState(
        productions=build_productions(),
        params=pack.kernel.activation_params(),
        rng=rng,
    )
    for scene in pack.scenes:
        kernel.add_chunk(Chunk(id=f"scene:{scene.id}", chunk_type="scene", slots={"name": scene.id}))
    for topic in pack.topics:
        kernel.add_chunk(Chunk(id=f"topic:{topic}", chunk_type="topic", slots={"name": topic}))
    for technique in pack.techniques:
        kernel.add_chunk(technique_chunk(technique))
    return kernel


def _flag(value: bool) -> str:
    return YES if value else NO


def encode_goal(state: InformationState, pack: ContentPack) -> Chunk:
    """Project the information state onto a goal chunk for the cycle."""
    scene = pack.scene(state.current_scene)
    topic = scene.topic
    if topic is None:
        scene_kind = "introduction" if scene.id == pack.scenes[0].id else "conclusion"
    else:
        scene_kind = "topic"
    ts = state.topic_states.get(topic) if topic else None
    slots: dict = {
        "scene": scene.id,
        "scene_kind": scene_kind,
        "scene_ref": ChunkRef(f"scene:{scene.id}"),
        "topic_id": topic if topic else NONE,
        "greeted": _flag(greeting_emitted(state)),
        "farewelled": _flag(goodbye_emitted(state)),
        "profile": state.ethical_profile.value,
    }
    if topic is not None:
        slots["topic"] = ChunkRef(f"topic:{topic}")
        slots.update(
            know_assessed=_flag(question_answered(state, QuestionKind.KNOWLEDGE_PROBE, topic)),
            responded=_flag(knowledge_responded(state, topic)),
            intent_assessed=_flag(question_answered(state, QuestionKind.INTENTION_PROBE, topic)),
            reassessed=_flag(question_answered(state, QuestionKind.ROLE_REASSESSMENT, topic)),
            knowledge=ts.knowledge.value,
            intention=ts.intention.value,
            argued=_flag(ts.argued),
            climax_capable=_flag(scene.climax_capable),
            has_arg1=_flag(ts.argued or informed(state, topic)),
            exception_issued=_flag(ts.exception_issued),
            substituted=_flag(ts.substitution_issued),
            closed=_flag(climax_closed(state, topic)),
        )
    return Chunk(id="goal:conversation", chunk_type="conversation", slots=slots)


def choose_technique(
    rng: random.Random,
    techniques: Sequence[PersuasiveTechnique] = tuple(PersuasiveTechnique),
    params: Optional[ActivationParams] = None,
    kernel: Optional[KernelState] = None,
    goal: Optional[Chunk] = None,
) -> PersuasiveTechnique:
    """Uniform draw over the enabled techniques from the session stream.

    All technique chunks share the same base activation, associations onto
    them are forbidden by pack validation, and the retrieval noise is i.i.d.
    per candidate, so the one with maximal activation is a uniform pick.
    """
    if not techniques:
        raise PolicyError("no persuasive techniques enabled")
    if params is None:
        params = ActivationParams(noise_scale=1.0)
    if kernel is None:
        kernel = KernelState(params=params, rng=rng)
        for technique in techniques:
            kernel.add_chunk(technique_chunk(technique))
    chunk = retrieve(RetrievalRequest("technique"), kernel, goal, params)
    if chunk is None:
        raise PolicyError("technique retrieval failed; check the pack's kernel parameters")
    return PersuasiveTechnique(chunk.slots["name"])


def select_act(
    state: InformationState,
    pack: ContentPack,
    rng: random.Random,
    kernel: Optional[KernelState] = None,
) -> Optional[DialogueAct]:
    """Fire the policy once and return the produced act, updating the state.

    Returns None when the production cycle is quiescent, which means the
    current scene has nothing left to say (the caller advances the scene or,
    after the goodbye, ends the session).
    """
    if kernel is None:
        kernel = build_session_kernel(pack, rng)
    goal = encode_goal(state, pack)
    kernel.set_buffer("goal", goal)
    kernel.set_buffer("retrieval", None)

    directive = None
    for _ in range(_MAX_CYCLE_STEPS):
        result = step(kernel)
        if result is None:
            return None
        if result.directives:
            directive = result.directives[0]
            break
    if directive is None:
        raise PolicyError("production cycle did not settle on an act")

    function = CommunicativeFunction(directive["function"])
    need = NeedKind(directive["need"])
    topic = directive.get("topic")
    topic = None if topic in (None, NONE) else topic
    scene = pack.scene(state.current_scene)

    technique = None
    options: tuple[str, ...] = ()
    question_id = None
    if function == CommunicativeFunction.QUESTION:
        question = scene.question_of_kind(QuestionKind(directive["question_kind"]))
        utterance = question.prompt
        options = tuple(o.id for o in question.options)
        question_id = question.id
    elif function == CommunicativeFunction.ARGUMENT:
        technique = choose_technique(
            rng, pack.techniques, params=kernel.params, kernel=kernel, goal=goal
        )
        utterance = render(pack, function, scene.id, technique)
    else:
        utterance = render(pack, function, scene.id)

    act = DialogueAct(
        function=function,
        scene=scene.id,
        fulfils=need,
        utterance=utterance,
        topic=topic,
        technique=technique,
        options=options,
        question=question_id,
    )
    _apply_act_effects(state, act, pack)
    kernel.set_buffer(
        "vocal", Chunk(id=f"vocal:{len(state.history)}", chunk_type="utterance",
                       slots={"text": act.utterance})
    )
    return act


def _apply_act_effects(state: InformationState, act: DialogueAct, pack: ContentPack) -> None:
    state.history.append(
        ActRecord(
            function=act.function,
            scene=act.scene,
            fulfils=act.fulfils,
            utterance=act.utterance,
            topic=act.topic,
            technique=act.technique,
            options=act.options,
            question=act.question,
        )
    )
    if act.topic is None:
        return
    ts = state.topic_states[act.topic]
    if act.function == CommunicativeFunction.ARGUMENT:
        ts.argued = True
    elif act.function == CommunicativeFunction.EXCEPTION:
        ts.exception_issued = True
        state.active_role = pack.scene(act.scene).exception.condition
    elif act.function == CommunicativeFunction.SUBSTITUTION:
        ts.substitution_issued = True
