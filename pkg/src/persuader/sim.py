"""Scripted-user simulation: single runs, batch statistics, invariant checks.

Profiles answer the engine's questions by fixed option, by target level, or
by a seeded draw over levels; the harness drives sessions end to end without
any network layer.  Every produced transcript is checked by an independent
validator that re-derives the user model from the recorded answer effects
alone (it never consults the engine), so a policy bug cannot hide itself.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .model import QuestionKind
from .pack import ContentPack, QuestionSpec
from .session import SessionRuntime

LEVELS = ("low", "medium", "high")


class HarnessError(Exception):
    """The simulation itself is misconfigured (not an engine defect)."""


@dataclass(frozen=True)
class UserProfile:
    """Answer policy: one rule per (question kind, topic), '*' as wildcard.

    A rule is one of
      {"option": "<option id>"}          answer that option,
      {"level": "<low|medium|high>"}      answer the option with that effect,
      {"levels": {"low": 0.7, ...}}       draw the level per run.
    A role_reassessment rule overrides the post-exception intention; when
    absent the intention rule is reused.
    """

    id: str
    rules: Mapping[str, Mapping] = field(default_factory=dict)

    def _rule_for(self, kind: QuestionKind, topic: str) -> Optional[Mapping]:
        for key in (f"{kind.value}:{topic}", kind.value):
            if key in self.rules:
                return self.rules[key]
        if kind == QuestionKind.ROLE_REASSESSMENT:
            return self._rule_for(QuestionKind.INTENTION_PROBE, topic)
        return None

    def answer(self, question: QuestionSpec, topic: str, rng: random.Random) -> str:
        rule = self._rule_for(question.kind, topic)
        if rule is None:
            raise HarnessError(
                f"profile {self.id!r} has no rule for question {question.id!r} "
                f"({question.kind.value}, topic {topic})"
            )
        if "option" in rule:
            if question.option(rule["option"]) is None:
                raise HarnessError(
                    f"profile {self.id!r}: option {rule['option']!r} "
                    f"is not an option of question {question.id!r}"
                )
            return rule["option"]
        if "level" in rule:
            level = rule["level"]
        else:
            weights = rule.get("levels")
            if not weights:
                raise HarnessError(f"profile {self.id!r}: empty rule for {question.id!r}")
            names = sorted(weights)
            level = rng.choices(names, weights=[weights[n] for n in names])[0]
        effect_key = "knowledge" if question.kind == QuestionKind.KNOWLEDGE_PROBE else "intention"
        for option in question.options:
            if option.effects.get(effect_key) == level:
                return option.id
        raise HarnessError(
            f"profile {self.id!r}: question {question.id!r} has no option "
            f"with {effect_key}={level}"
        )


BUILTIN_PROFILES: dict[str, UserProfile] = {
    "skeptic": UserProfile(
        "skeptic",
        {
            "knowledge_probe": {"level": "low"},
            "intention_probe": {"level": "low"},
            "role_reassessment": {"level": "low"},
        },
    ),
    "compliant": UserProfile(
        "compliant",
        {
            "knowledge_probe": {"level": "high"},
            "intention_probe": {"level": "high"},
        },
    ),
    "curious": UserProfile(
        "curious",
        {
            "knowledge_probe": {"level": "low"},
            "intention_probe": {"level": "high"},
            "role_reassessment": {"level": "medium"},
        },
    ),
    # Mostly compliant population with small opposed minorities (about 6%
    # on masks, 11% on the vaccine): smoke statistics only.
    "survey_2021": UserProfile(
        "survey_2021",
        {
            "knowledge_probe": {"levels": {"low": 0.03, "medium": 0.05, "high": 0.92}},
            "intention_probe": {"levels": {"low": 0.08, "medium": 0.12, "high": 0.80}},
            "intention_probe:mask": {"levels": {"low": 0.06, "medium": 0.05, "high": 0.89}},
            "intention_probe:vaccination": {"levels": {"low": 0.11, "medium": 0.09, "high": 0.80}},
            "role_reassessment": {"levels": {"low": 0.50, "medium": 0.30, "high": 0.20}},
        },
    ),
}


def simulate_session(
    pack: ContentPack,
    profile: UserProfile,
    seed: int,
    ethical: str = "random",
) -> list[dict]:
    """One scripted session; returns the full transcript (header + entries)."""
    runtime = SessionRuntime(pack, seed=seed, profile=ethical)
    answer_rng = random.Random(f"user:{seed}")
    runtime.start()
    guard = 0
    while not runtime.is_complete:
        act = runtime.pending_act
        if act is None:
            raise HarnessError("agent stopped without a question or a goodbye")
        scene, question = pack.question(act.question)
        runtime.submit(profile.answer(question, scene.topic, answer_rng))
        guard += 1
        if guard > 100:
            raise HarnessError("session did not terminate")
    return runtime.transcript()


# --- the independent transcript validator ------------------------------------


def check_transcript(transcript: Sequence[dict]) -> list[str]:
    """Re-derive the user model from the transcript and flag any act that
    violates the dialogue contract.  Returns a list of violation messages.
    """
    violations: list[str] = []
    header = transcript[0] if transcript else {}
    if header.get("kind") != "header":
        return ["transcript has no header"]
    profile = header.get("resolved_profile")
    entries = [e for e in transcript[1:] if e.get("kind") == "entry"]

    knowledge: dict[str, str] = {}
    intention: dict[str, str] = {}
    argued: set[str] = set()
    arg1: set[str] = set()  # topics with a prior inform or argument
    exception_topics: set[str] = set()
    reassessed_low: set[str] = set()
    probed_knowledge: dict[str, str] = {}  # first knowledge_probe answer per topic
    probed_intention: dict[str, str] = {}
    responses: dict[str, set[str]] = {}  # topic -> functions emitted for it
    substituted: set[str] = set()
    goodbye_count = 0

    def fail(seq, message):
        violations.append(f"seq {seq}: {message}")

    for i, entry in enumerate(entries):
        if entry.get("seq") != i:
            fail(entry.get("seq"), f"sequence numbers not contiguous (expected {i})")
        payload = entry.get("payload", {})
        topic = payload.get("topic")
        if entry["direction"] == "user":
            effects = payload.get("effects", {})
            if "knowledge" in effects:
                knowledge[topic] = effects["knowledge"]
            if "intention" in effects:
                intention[topic] = effects["intention"]
            kind = payload.get("question_kind")
            if kind == "knowledge_probe":
                probed_knowledge.setdefault(topic, effects.get("knowledge"))
            elif kind == "intention_probe":
                probed_intention.setdefault(topic, effects.get("intention"))
            elif kind == "role_reassessment":
                if effects.get("intention") == "low":
                    reassessed_low.add(topic)
                else:
                    reassessed_low.discard(topic)
            continue

        function = payload.get("function")
        seq = entry["seq"]
        if topic is not None:
            key = function if entry.get("need") != "climax" else f"{function}:climax"
            responses.setdefault(topic, set()).add(key)
        if i == 0 and function != "greeting_self_introduction":
            fail(seq, f"first act is {function}, not the greeting")
        if function == "goodbye":
            goodbye_count += 1
        has_options = bool(payload.get("options"))
        if has_options != (function == "question"):
            fail(seq, f"{function} act with options={payload.get('options')}")
        if function == "inform":
            if knowledge.get(topic, "low") != "low":
                fail(seq, f"inform on {topic} with knowledge {knowledge.get(topic)}")
            arg1.add(topic)
        elif function == "reinforce":
            if knowledge.get(topic, "low") != "medium":
                fail(seq, f"reinforce on {topic} with knowledge {knowledge.get(topic)}")
        elif function == "argument":
            if intention.get(topic, "low") != "low":
                fail(seq, f"argument on {topic} with intention {intention.get(topic)}")
            if topic in argued:
                fail(seq, f"second argument on {topic}")
            if not payload.get("technique"):
                fail(seq, "argument without a technique")
            argued.add(topic)
            arg1.add(topic)
        elif function == "exception":
            if topic not in arg1:
                fail(seq, f"exception on {topic} without a prior inform or argument")
            if topic in exception_topics:
                fail(seq, f"second exception on {topic}")
            exception_topics.add(topic)
        elif function == "substitution":
            if profile != "open_minded":
                fail(seq, "substitution under a non-open-minded profile")
            if topic not in exception_topics:
                fail(seq, f"substitution on {topic} without a prior exception")
            if topic not in reassessed_low:
                fail(seq, f"substitution on {topic} without a low post-exception intention")
            substituted.add(topic)

    if not entries:
        violations.append("transcript has no entries")
    else:
        last = entries[-1]
        if last["direction"] != "agent" or last["payload"].get("function") != "goodbye":
            violations.append("last entry is not the goodbye")
        if goodbye_count != 1:
            violations.append(f"goodbye emitted {goodbye_count} times")

    # completeness half of the gating equivalences: the assessed level must
    # have drawn the matching response
    response_for_level = {"low": "inform", "medium": "reinforce", "high": "acknowledge"}
    for topic, level in probed_knowledge.items():
        expected = response_for_level.get(level)
        if expected and expected not in responses.get(topic, set()):
            violations.append(f"topic {topic}: knowledge {level} answered but no {expected} act")
    for topic, level in probed_intention.items():
        if level == "low" and "argument" not in responses.get(topic, set()):
            violations.append(f"topic {topic}: intention low answered but no argument act")
    if profile == "open_minded":
        for topic in exception_topics & reassessed_low:
            if topic not in substituted:
                violations.append(
                    f"topic {topic}: open-minded low post-exception intention but no substitution"
                )
    return violations


# --- batch runs ----------------------------------------------------------------


@dataclass
class BatchReport:
    runs: int
    technique_counts: Counter = field(default_factory=Counter)
    substitution_count: int = 0
    argument_count: int = 0
    violation_count: int = 0
    violations: list[str] = field(default_factory=list)
    knowledge_histogram: dict[str, Counter] = field(default_factory=dict)
    intention_histogram: dict[str, Counter] = field(default_factory=dict)
    profile_counts: Counter = field(default_factory=Counter)
    ethics_counts: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "argument_count": self.argument_count,
            "technique_counts": dict(sorted(self.technique_counts.items())),
            "substitution_count": self.substitution_count,
            "violation_count": self.violation_count,
            "violations": self.violations[:50],
            "knowledge_histogram": {
                t: dict(sorted(c.items())) for t, c in sorted(self.knowledge_histogram.items())
            },
            "intention_histogram": {
                t: dict(sorted(c.items())) for t, c in sorted(self.intention_histogram.items())
            },
            "profile_counts": dict(sorted(self.profile_counts.items())),
            "ethics_counts": dict(sorted(self.ethics_counts.items())),
        }

    def to_text(self) -> str:
        lines = [
            f"runs                {self.runs}",
            f"arguments           {self.argument_count}",
        ]
        for technique, count in sorted(self.technique_counts.items()):
            share = count / self.argument_count if self.argument_count else 0.0
            lines.append(f"  {technique:<17} {count:>6}  ({share:.3f})")
        lines.append(f"substitutions       {self.substitution_count}")
        lines.append(f"violations          {self.violation_count}")
        lines.append("final levels (knowledge / intention)")
        for topic in sorted(self.knowledge_histogram):
            know = self.knowledge_histogram[topic]
            intent = self.intention_histogram[topic]
            know_s = " ".join(f"{lvl}={know.get(lvl, 0)}" for lvl in LEVELS)
            intent_s = " ".join(f"{lvl}={intent.get(lvl, 0)}" for lvl in LEVELS)
            lines.append(f"  {topic:<13} {know_s:<30} | {intent_s}")
        return "\n".join(lines)


def final_levels(transcript: Sequence[dict]) -> tuple[dict[str, str], dict[str, str]]:
    """Last recorded knowledge/intention per topic, from answer effects."""
    knowledge: dict[str, str] = {}
    intention: dict[str, str] = {}
    for entry in transcript:
        if entry.get("kind") != "entry" or entry.get("direction") != "user":
            continue
        payload = entry["payload"]
        topic = payload.get("topic")
        effects = payload.get("effects", {})
        if "knowledge" in effects:
            knowledge[topic] = effects["knowledge"]
        if "intention" in effects:
            intention[topic] = effects["intention"]
    return knowledge, intention


def run_batch(
    pack: ContentPack,
    profile_mix: Sequence[tuple[UserProfile, float]],
    n: int,
    seed_base: int,
    ethics: str = "random",
) -> BatchReport:
    """n independent seeded sessions; every transcript is validated."""
    if n < 1:
        raise HarnessError("n must be >= 1")
    if not profile_mix:
        raise HarnessError("profile mix is empty")
    master = random.Random(seed_base)
    profiles = [p for p, _ in profile_mix]
    weights = [w for _, w in profile_mix]
    report = BatchReport(runs=n)
    for topic_hist in (report.knowledge_histogram, report.intention_histogram):
        for topic in pack.topics:
            topic_hist[topic] = Counter()
    for _ in range(n):
        profile = master.choices(profiles, weights=weights)[0]
        session_seed = master.getrandbits(63)
        transcript = simulate_session(pack, profile, session_seed, ethical=ethics)
        report.profile_counts[profile.id] += 1
        report.ethics_counts[transcript[0]["resolved_profile"]] += 1
        for violation in check_transcript(transcript):
            report.violation_count += 1
            report.violations.append(f"profile={profile.id} seed={session_seed}: {violation}")
        for entry in transcript[1:]:
            payload = entry["payload"]
            if entry["direction"] == "agent" and payload.get("function") == "argument":
                report.argument_count += 1
                report.technique_counts[payload["technique"]] += 1
            if entry["direction"] == "agent" and payload.get("function") == "substitution":
                report.substitution_count += 1
        knowledge, intention = final_levels(transcript)
        for topic, level in knowledge.items():
            report.knowledge_histogram[topic][level] += 1
        for topic, level in intention.items():
            report.intention_histogram[topic][level] += 1
    return report


# --- profile files ---------------------------------------------------------------


def load_profiles(path: Union[str, Path]) -> list[tuple[UserProfile, float]]:
    """Profile-mix file: {"profiles": [{"id", "answers"}...], "mix": {id: weight}}."""
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    profiles: dict[str, UserProfile] = {}
    for raw in document.get("profiles", []):
        profile = UserProfile(id=raw["id"], rules=raw.get("answers", {}))
        profiles[profile.id] = profile
    mix = document.get("mix") or {pid: 1.0 for pid in profiles}
    out = []
    for pid, weight in mix.items():
        if pid in profiles:
            out.append((profiles[pid], float(weight)))
        elif pid in BUILTIN_PROFILES:
            out.append((BUILTIN_PROFILES[pid], float(weight)))
        else:
            raise HarnessError(f"mix references unknown profile {pid!r}")
    if not out:
        raise HarnessError(f"no profiles defined in {path}")
    return out


def builtin_profiles_path() -> Path:
    return Path(__file__).parent / "profiles" / "default.json"
