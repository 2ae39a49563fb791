"""Content packs: the external domain script the dialogue engine runs on.

A pack is a single JSON document declaring the ordered scenes (introduction,
one scene per topic, conclusion), the questions asked in each scene with the
knowledge/intention effects of every answer option, the utterance templates
per communicative function (and per persuasive technique for arguments), the
enabled techniques and the kernel parameters.  ``load_pack`` validates the
whole document and reports every problem with a path-precise diagnostic, so
a pack that loads can never hit a missing template at runtime.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from .kernel import ActivationParams
from .model import CommunicativeFunction, Level, PersuasiveTechnique, QuestionKind

INTRODUCTION_SCENE = "introduction"
CONCLUSION_SCENE = "conclusion"

# Functions whose utterances come from scene templates (questions take their
# text from the question prompt, exception/substitution from the exception
# spec).
_TEMPLATE_FUNCTIONS = {
    CommunicativeFunction.GREETING_SELF_INTRODUCTION,
    CommunicativeFunction.INFORM,
    CommunicativeFunction.REINFORCE,
    CommunicativeFunction.ACKNOWLEDGE,
    CommunicativeFunction.ARGUMENT,
    CommunicativeFunction.GOODBYE,
}


class PackParseError(Exception):
    """The document is not well-formed (bad JSON or wrong top-level shape)."""


class PackValidationError(Exception):
    """The document parsed but violates the pack contract."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


class MissingTemplateError(KeyError):
    """Requested a (function, scene, technique) with no template.

    Unreachable for packs that passed validation; kept as a hard fault so a
    bypassed loader fails loudly.
    """


@dataclass(frozen=True)
class AnswerOption:
    id: str
    label: str
    effects: Mapping[str, str]  # {"knowledge": "high"} and/or {"intention": "low"}


@dataclass(frozen=True)
class QuestionSpec:
    id: str
    kind: QuestionKind
    prompt: str
    options: tuple[AnswerOption, ...]

    def option(self, option_id: str) -> Optional[AnswerOption]:
        for opt in self.options:
            if opt.id == option_id:
                return opt
        return None


@dataclass(frozen=True)
class ExceptionSpec:
    condition: str  # narrative role id, e.g. "mask-allergy"
    role_prompt: str
    substitution: str


@dataclass(frozen=True)
class SceneSpec:
    id: str
    topic: Optional[str]
    climax_capable: bool
    questions: tuple[QuestionSpec, ...]
    templates: Mapping[str, Union[str, Mapping[str, str]]]
    exception: Optional[ExceptionSpec] = None

    def question_of_kind(self, kind: QuestionKind) -> Optional[QuestionSpec]:
        for q in self.questions:
            if q.kind == kind:
                return q
        return None

    def template_for(
        self, function: CommunicativeFunction, technique: Optional[PersuasiveTechnique] = None
    ) -> Optional[str]:
        if function == CommunicativeFunction.EXCEPTION:
            return self.exception.role_prompt if self.exception else None
        if function == CommunicativeFunction.SUBSTITUTION:
            return self.exception.substitution if self.exception else None
        entry = self.templates.get(function.value)
        if function == CommunicativeFunction.ARGUMENT:
            if not isinstance(entry, Mapping) or technique is None:
                return None
            return entry.get(technique.value)
        return entry if isinstance(entry, str) else None


@dataclass(frozen=True)
class KernelConfig:
    source_weight_total: float = 1.0
    noise_scale: float = 1.0
    retrieval_threshold: Optional[float] = None  # None means -inf
    association_strengths: tuple[tuple[str, str, float], ...] = ()

    def activation_params(self) -> ActivationParams:
        threshold = float("-inf") if self.retrieval_threshold is None else self.retrieval_threshold
        return ActivationParams(
            source_weight_total=self.source_weight_total,
            association_strengths={(s, t): v for s, t, v in self.association_strengths},
            noise_scale=self.noise_scale,
            retrieval_threshold=threshold,
        )


@dataclass(frozen=True)
class ContentPack:
    id: str
    version: str
    techniques: tuple[PersuasiveTechnique, ...]
    kernel: KernelConfig
    scenes: tuple[SceneSpec, ...]
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def scene_ids(self) -> list[str]:
        return [s.id for s in self.scenes]

    def scene(self, scene_id: str) -> SceneSpec:
        for s in self.scenes:
            if s.id == scene_id:
                return s
        raise KeyError(f"unknown scene {scene_id!r}")

    @property
    def topics(self) -> list[str]:
        return [s.topic for s in self.scenes if s.topic is not None]

    def next_scene(self, scene_id: str) -> Optional[str]:
        ids = self.scene_ids
        i = ids.index(scene_id)
        return ids[i + 1] if i + 1 < len(ids) else None

    def question(self, question_id: str) -> Optional[tuple[SceneSpec, QuestionSpec]]:
        for s in self.scenes:
            for q in s.questions:
                if q.id == question_id:
                    return s, q
        return None


def render(
    pack: ContentPack,
    function: CommunicativeFunction,
    scene: str,
    technique: Optional[PersuasiveTechnique] = None,
) -> str:
    """Template text for the act, verbatim (no runtime substitution)."""
    text = pack.scene(scene).template_for(function, technique)
    if text is None:
        raise MissingTemplateError(
            f"scene {scene}: no template for {function.value}"
            + (f" ({technique.value})" if technique else "")
        )
    return text


# --- loading & validation ----------------------------------------------------


def _enum_values(enum_cls) -> set[str]:
    return {e.value for e in enum_cls}


def _parse_option(raw, where: str, errors: list[str]) -> Optional[AnswerOption]:
    if not isinstance(raw, dict):
        errors.append(f"{where}: option must be an object")
        return None
    oid = raw.get("id")
    label = raw.get("label")
    effects = raw.get("effects")
    where = f"{where}, option {oid or '?'}"
    if not oid or not isinstance(oid, str):
        errors.append(f"{where}: missing id")
        return None
    if not label or not isinstance(label, str):
        errors.append(f"{where}: missing label")
    if not isinstance(effects, dict) or not effects:
        errors.append(f"{where}: at least one effect is required")
        effects = {}
    clean: dict[str, str] = {}
    for key, value in effects.items():
        if key == "topic":
            clean[key] = value
            continue
        if key not in ("knowledge", "intention"):
            errors.append(f"{where}: unknown effect {key!r}")
        elif value not in _enum_values(Level):
            errors.append(f"{where}: effect {key} has invalid level {value!r}")
        else:
            clean[key] = value
    return AnswerOption(id=oid, label=label or "", effects=clean)


def _parse_question(raw, where: str, errors: list[str]) -> Optional[QuestionSpec]:
    if not isinstance(raw, dict):
        errors.append(f"{where}: question must be an object")
        return None
    qid = raw.get("id")
    if not qid or not isinstance(qid, str):
        errors.append(f"{where}: question is missing an id")
        return None
    where = f"{where}, question {qid}"
    kind = raw.get("kind")
    if kind not in _enum_values(QuestionKind):
        errors.append(f"{where}: invalid kind {kind!r}")
        return None
    prompt = raw.get("prompt")
    if not prompt or not isinstance(prompt, str):
        errors.append(f"{where}: missing prompt")
    options = [
        opt
        for o in raw.get("options", [])
        if (opt := _parse_option(o, where, errors)) is not None
    ]
    if len(options) < 2:
        errors.append(f"{where}: at least 2 options are required")
    seen = set()
    for opt in options:
        if opt.id in seen:
            errors.append(f"{where}: duplicate option id {opt.id!r}")
        seen.add(opt.id)
    return QuestionSpec(id=qid, kind=QuestionKind(kind), prompt=prompt or "", options=tuple(options))


def _parse_scene(raw, index: int, errors: list[str]) -> Optional[SceneSpec]:
    if not isinstance(raw, dict):
        errors.append(f"scenes[{index}]: scene must be an object")
        return None
    sid = raw.get("id")
    if not sid or not isinstance(sid, str):
        errors.append(f"scenes[{index}]: scene is missing an id")
        return None
    where = f"scene {sid}"
    topic = raw.get("topic")
    if topic is not None and not isinstance(topic, str):
        errors.append(f"{where}: topic must be a string or null")
        topic = None
    climax = bool(raw.get("climax_capable", False))

    templates = raw.get("templates", {})
    if not isinstance(templates, dict):
        errors.append(f"{where}: templates must be an object")
        templates = {}
    known = _enum_values(CommunicativeFunction)
    clean_templates: dict[str, Union[str, dict[str, str]]] = {}
    for key, value in templates.items():
        if key not in known:
            errors.append(f"{where}: unknown communicative function {key!r} in templates")
            continue
        if key in (CommunicativeFunction.EXCEPTION.value, CommunicativeFunction.SUBSTITUTION.value):
            errors.append(
                f"{where}: {key} text belongs in the scene's exception spec, not in templates"
            )
            continue
        if key == CommunicativeFunction.ARGUMENT.value:
            if not isinstance(value, dict):
                errors.append(f"{where}: argument templates must map technique -> text")
                continue
            arg_map: dict[str, str] = {}
            for tech, text in value.items():
                if tech not in _enum_values(PersuasiveTechnique):
                    errors.append(f"{where}: unknown technique {tech!r} in argument templates")
                elif not text or not isinstance(text, str):
                    errors.append(f"{where}: empty argument template for {tech}")
                else:
                    arg_map[tech] = text
            clean_templates[key] = arg_map
        elif not value or not isinstance(value, str):
            errors.append(f"{where}: template {key} must be a non-empty string")
        else:
            clean_templates[key] = value

    exception = None
    raw_exc = raw.get("exception")
    if raw_exc is not None:
        if not isinstance(raw_exc, dict):
            errors.append(f"{where}: exception must be an object")
        else:
            cond = raw_exc.get("condition")
            role_prompt = raw_exc.get("role_prompt")
            substitution = raw_exc.get("substitution")
            if not cond or not isinstance(cond, str):
                errors.append(f"{where}: exception is missing a condition id")
            if not role_prompt or not isinstance(role_prompt, str):
                errors.append(f"{where}: exception is missing the role prompt text")
            if not substitution or not isinstance(substitution, str):
                errors.append(f"{where}: exception is missing the substitution text")
            exception = ExceptionSpec(
                condition=cond or "", role_prompt=role_prompt or "", substitution=substitution or ""
            )

    questions = [
        q
        for raw_q in raw.get("questions", [])
        if (q := _parse_question(raw_q, where, errors)) is not None
    ]
    return SceneSpec(
        id=sid,
        topic=topic,
        climax_capable=climax,
        questions=tuple(questions),
        templates=clean_templates,
        exception=exception,
    )


def _validate_scene_contract(scene: SceneSpec, techniques, errors: list[str]) -> None:
    where = f"scene {scene.id}"
    is_topic_scene = scene.topic is not None

    if scene.climax_capable and scene.exception is None:
        errors.append(f"{where}: climax_capable scene has no exception spec")
    if scene.exception is not None and not is_topic_scene:
        errors.append(f"{where}: exception requires a topic scene")
    if scene.climax_capable and scene.exception is not None and not scene.exception.substitution:
        # already reported at parse time; kept cheap here
        pass

    if not is_topic_scene and scene.questions:
        errors.append(f"{where}: questions are only allowed in topic scenes")

    if is_topic_scene:
        for fn in (
            CommunicativeFunction.INFORM,
            CommunicativeFunction.REINFORCE,
            CommunicativeFunction.ACKNOWLEDGE,
        ):
            if scene.template_for(fn) is None:
                errors.append(f"{where}: missing {fn.value} template")
        for tech in techniques:
            if scene.template_for(CommunicativeFunction.ARGUMENT, tech) is None:
                errors.append(f"{where}: missing argument template for {tech.value}")
        kinds = [q.kind for q in scene.questions]
        if kinds.count(QuestionKind.KNOWLEDGE_PROBE) != 1:
            errors.append(f"{where}: exactly one knowledge_probe question is required")
        if kinds.count(QuestionKind.INTENTION_PROBE) != 1:
            errors.append(f"{where}: exactly one intention_probe question is required")
        reassessments = kinds.count(QuestionKind.ROLE_REASSESSMENT)
        if scene.climax_capable and reassessments != 1:
            errors.append(f"{where}: climax scene needs exactly one role_reassessment question")
        if not scene.climax_capable and reassessments:
            errors.append(f"{where}: role_reassessment question in a non-climax scene")
        for q in scene.questions:
            for opt in q.options:
                effect_topic = opt.effects.get("topic")
                if effect_topic is not None and effect_topic != scene.topic:
                    errors.append(
                        f"{where}, question {q.id}, option {opt.id}: "
                        f"effect targets topic {effect_topic!r} outside this scene"
                    )


def _validate(document: dict) -> ContentPack:
    errors: list[str] = []

    header = document.get("pack")
    if not isinstance(header, dict):
        errors.append("pack: missing pack header object")
        header = {}
    pack_id = header.get("id")
    version = header.get("version")
    if not pack_id or not isinstance(pack_id, str):
        errors.append("pack: missing id")
    if not version or not isinstance(version, str):
        errors.append("pack: missing version")
    meta = {k: v for k, v in header.items() if k not in ("id", "version")}

    raw_techniques = document.get("techniques", [t.value for t in PersuasiveTechnique])
    techniques: list[PersuasiveTechnique] = []
    if not isinstance(raw_techniques, list) or not raw_techniques:
        errors.append("techniques: must be a non-empty list")
    else:
        for t in raw_techniques:
            if t not in _enum_values(PersuasiveTechnique):
                errors.append(f"techniques: unknown technique {t!r}")
            elif PersuasiveTechnique(t) in techniques:
                errors.append(f"techniques: duplicate technique {t!r}")
            else:
                techniques.append(PersuasiveTechnique(t))

    raw_kernel = document.get("kernel", {})
    if not isinstance(raw_kernel, dict):
        errors.append("kernel: must be an object")
        raw_kernel = {}
    strengths: list[tuple[str, str, float]] = []
    for i, raw_s in enumerate(raw_kernel.get("association_strengths", [])):
        where = f"kernel.association_strengths[{i}]"
        if not isinstance(raw_s, dict) or not {"source", "target", "strength"} <= raw_s.keys():
            errors.append(f"{where}: needs source, target and strength")
            continue
        source, target, value = raw_s["source"], raw_s["target"], raw_s["strength"]
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            errors.append(f"{where}: strength must be finite")
            continue
        if str(source).startswith("technique:") or str(target).startswith("technique:"):
            errors.append(f"{where}: associations may not touch technique chunks")
            continue
        strengths.append((str(source), str(target), float(value)))
    noise = raw_kernel.get("noise_scale", 1.0)
    weight = raw_kernel.get("source_weight_total", 1.0)
    threshold = raw_kernel.get("retrieval_threshold")
    for name, value in (("noise_scale", noise), ("source_weight_total", weight)):
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            errors.append(f"kernel.{name}: must be a finite number >= 0")
    if threshold is not None and not isinstance(threshold, (int, float)):
        errors.append("kernel.retrieval_threshold: must be a number or null")
    if len(techniques) > 1 and isinstance(noise, (int, float)) and noise <= 0:
        errors.append("kernel.noise_scale: must be > 0 when more than one technique is enabled")

    raw_scenes = document.get("scenes")
    scenes: list[SceneSpec] = []
    if not isinstance(raw_scenes, list) or not raw_scenes:
        errors.append("scenes: must be a non-empty list")
    else:
        for i, raw in enumerate(raw_scenes):
            scene = _parse_scene(raw, i, errors)
            if scene is not None:
                scenes.append(scene)

    seen_ids: set[str] = set()
    seen_topics: set[str] = set()
    seen_questions: set[str] = set()
    for scene in scenes:
        if scene.id in seen_ids:
            errors.append(f"scene {scene.id}: duplicate scene id")
        seen_ids.add(scene.id)
        if scene.topic is not None:
            if scene.topic in seen_topics:
                errors.append(f"scene {scene.id}: duplicate topic {scene.topic!r}")
            seen_topics.add(scene.topic)
        for q in scene.questions:
            if q.id in seen_questions:
                errors.append(f"scene {scene.id}, question {q.id}: duplicate question id")
            seen_questions.add(q.id)

    if scenes:
        if scenes[0].id != INTRODUCTION_SCENE or scenes[0].topic is not None:
            errors.append("scenes[0]: first scene must be the introduction (no topic)")
        if scenes[-1].id != CONCLUSION_SCENE or scenes[-1].topic is not None:
            errors.append("scenes[-1]: last scene must be the conclusion (no topic)")
        for scene in scenes[1:-1]:
            if scene.topic is None:
                errors.append(f"scene {scene.id}: interior scenes must name a topic")
        intro = scenes[0]
        if intro.id == INTRODUCTION_SCENE and intro.template_for(
            CommunicativeFunction.GREETING_SELF_INTRODUCTION
        ) is None:
            errors.append("scene introduction: missing greeting_self_introduction template")
        outro = scenes[-1]
        if outro.id == CONCLUSION_SCENE and outro.template_for(CommunicativeFunction.GOODBYE) is None:
            errors.append("scene conclusion: missing goodbye template")
        for scene in scenes:
            _validate_scene_contract(scene, techniques, errors)

    if errors:
        raise PackValidationError(errors)

    return ContentPack(
        id=pack_id,
        version=version,
        techniques=tuple(techniques),
        kernel=KernelConfig(
            source_weight_total=float(weight),
            noise_scale=float(noise),
            retrieval_threshold=None if threshold is None else float(threshold),
            association_strengths=tuple(strengths),
        ),
        scenes=tuple(scenes),
        meta=meta,
    )


def load_pack(source: Union[str, Path, dict]) -> ContentPack:
    """Parse and validate a pack document (path, JSON text, or parsed dict)."""
    if isinstance(source, dict):
        document = source
    else:
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else None
        if text is None:
            candidate = str(source)
            if candidate.lstrip()[:1] in ("{", "["):
                text = candidate
            else:
                text = Path(candidate).read_text(encoding="utf-8")
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PackParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise PackParseError("pack document must be a JSON object")
    return _validate(document)


def serialize(pack: ContentPack) -> dict:
    """Back to the document form accepted by load_pack (round-trip safe)."""
    scenes = []
    for scene in pack.scenes:
        raw: dict = {
            "id": scene.id,
            "topic": scene.topic,
            "climax_capable": scene.climax_capable,
            "templates": {k: dict(v) if isinstance(v, Mapping) else v
                          for k, v in scene.templates.items()},
            "questions": [
                {
                    "id": q.id,
                    "kind": q.kind.value,
                    "prompt": q.prompt,
                    "options": [
                        {"id": o.id, "label": o.label, "effects": dict(o.effects)}
                        for o in q.options
                    ],
                }
                for q in scene.questions
            ],
        }
        if scene.exception is not None:
            raw["exception"] = {
                "condition": scene.exception.condition,
                "role_prompt": scene.exception.role_prompt,
                "substitution": scene.exception.substitution,
            }
        scenes.append(raw)
    return {
        "pack": {"id": pack.id, "version": pack.version, **dict(pack.meta)},
        "techniques": [t.value for t in pack.techniques],
        "kernel": {
            "source_weight_total": pack.kernel.source_weight_total,
            "noise_scale": pack.kernel.noise_scale,
            "retrieval_threshold": pack.kernel.retrieval_threshold,
            "association_strengths": [
                {"source": s, "target": t, "strength": v}
                for s, t, v in pack.kernel.association_strengths
            ],
        },
        "scenes": scenes,
    }


def builtin_pack_path(name: str = "covid19_en") -> Path:
    return Path(__file__).parent / "packs" / f"{name}.json"
