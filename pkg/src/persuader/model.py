"""Shared vocabulary: communicative functions, techniques, needs, levels.

These enumerations are fixed; content packs may attach templates and
questions only to values listed here.
"""

from enum import Enum


class Level(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class EthicalProfile(str, Enum):
    OPEN_MINDED = "open_minded"
    NEUTRAL = "neutral"


class CommunicativeFunction(str, Enum):
    GREETING_SELF_INTRODUCTION = "greeting_self_introduction"
    QUESTION = "question"
    INFORM = "inform"
    REINFORCE = "reinforce"
    ARGUMENT = "argument"
    EXCEPTION = "exception"
    SUBSTITUTION = "substitution"
    ACKNOWLEDGE = "acknowledge"
    GOODBYE = "goodbye"


class PersuasiveTechnique(str, Enum):
    AD_POPULUM = "ad_populum"
    AD_VERECUNDIAM = "ad_verecundiam"
    FRAMING = "framing"


class QuestionKind(str, Enum):
    KNOWLEDGE_PROBE = "knowledge_probe"
    INTENTION_PROBE = "intention_probe"
    ROLE_REASSESSMENT = "role_reassessment"


class NeedKind(str, Enum):
    SOCIAL_AFFILIATION = "social_affiliation"
    COMPETENCE = "competence"
    INTENTIONAL_ASSESSMENT = "intentional_assessment"
    ARGUMENTATION = "argumentation"
    CLIMAX = "climax"
    OPEN_MINDEDNESS = "open_mindedness"


class NeedCategory(str, Enum):
    SOCIAL = "social"
    COGNITIVE = "cognitive"
    ARGUMENTATIVE = "argumentative"
    NARRATIVE = "narrative"
    ETHICAL = "ethical"


NEED_CATEGORY = {
    NeedKind.SOCIAL_AFFILIATION: NeedCategory.SOCIAL,
    NeedKind.COMPETENCE: NeedCategory.COGNITIVE,
    NeedKind.INTENTIONAL_ASSESSMENT: NeedCategory.COGNITIVE,
    NeedKind.ARGUMENTATION: NeedCategory.ARGUMENTATIVE,
    NeedKind.CLIMAX: NeedCategory.NARRATIVE,
    NeedKind.OPEN_MINDEDNESS: NeedCategory.ETHICAL,
}

# Highest first; act selection always serves the first unsatisfied need.
NEED_PRIORITY = (
    NeedKind.SOCIAL_AFFILIATION,
    NeedKind.COMPETENCE,
    NeedKind.INTENTIONAL_ASSESSMENT,
    NeedKind.ARGUMENTATION,
    NeedKind.CLIMAX,
    NeedKind.OPEN_MINDEDNESS,
)
