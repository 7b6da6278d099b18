"""Experimental conditions: system prompts, banned lexemes and exemption rules.

Five conditions share one opening instruction.  Three of them restrict
vocabulary (E-Prime, No-Have, the neutral filler-word ban); the remaining two
(control, elaborated prompt) impose no lexical constraint.  Only E-Prime has a
content retry loop, and its feedback message is built here so that it stays a
single, reproducible template.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:  # pragma: no cover
    from constraint_eval.compliance import Violation


class ConditionId(str, enum.Enum):
    CONTROL = "control"
    E_PRIME = "e_prime"
    NO_HAVE = "no_have"
    ELABORATED_PROMPT = "elaborated_prompt"
    NEUTRAL_BAN = "neutral_ban"

    def __str__(self) -> str:
        return self.value


ALL_CONDITIONS: tuple[ConditionId, ...] = tuple(ConditionId)


@dataclass(frozen=True)
class ExemptBigram:
    """A two-token context in which a banned word is not a violation.

    ``side`` says where ``neighbor`` sits relative to the banned token:
    ``"next"`` for "rather than", ``"prev"`` for "but rather".
    """

    banned: str
    neighbor: str
    side: str = "next"

    def __post_init__(self) -> None:
        if self.side not in ("next", "prev"):
            raise ValueError(f"side must be 'next' or 'prev', got {self.side!r}")

    @property
    def pair(self) -> tuple[str, str]:
        if self.side == "next":
            return (self.banned, self.neighbor)
        return (self.neighbor, self.banned)


@dataclass(frozen=True)
class ConditionSpec:
    id: ConditionId
    prompt_text: str
    banned_lexemes: frozenset[str]
    exempt_bigrams: frozenset[ExemptBigram]
    has_retry: bool

    def __post_init__(self) -> None:
        for rule in self.exempt_bigrams:
            if rule.banned not in self.banned_lexemes:
                raise ValueError(
                    f"exemption {rule.pair} targets {rule.banned!r}, which is not banned"
                )

    @property
    def constrained(self) -> bool:
        return bool(self.banned_lexemes)


OPENING = (
    "You are a careful, analytical reasoning assistant. When presented with a "
    "problem, think through it step by step. Show your reasoning process, then "
    "provide your final answer."
)

NON_MENTION = "Do not mention or discuss this constraint in your response. Simply follow it."

E_PRIME_FORMS: frozenset[str] = frozenset({
    "is", "isn't", "am", "are", "aren't", "was", "wasn't", "were", "weren't",
    "be", "been", "being",
    # copula contractions; bare noun + 's reads as possessive and stays legal
    "i'm", "you're", "we're", "they're", "who're", "what're", "there're",
    "it's", "that's", "there's", "here's", "what's", "who's",
})

NO_HAVE_FORMS: frozenset[str] = frozenset({
    "have", "haven't", "has", "hasn't", "had", "hadn't", "having",
})

NEUTRAL_FORMS: tuple[str, ...] = (
    "very", "quite", "rather", "somewhat", "really", "pretty", "just", "fairly",
    "slightly", "extremely", "incredibly", "absolutely", "totally", "completely",
    "simply", "basically", "actually", "literally", "definitely", "certainly",
)

NEUTRAL_EXEMPTIONS: frozenset[ExemptBigram] = frozenset({
    ExemptBigram("rather", "than", "next"),
    ExemptBigram("rather", "but", "prev"),
    ExemptBigram("just", "as", "next"),
})

E_PRIME_ALTERNATIVES: tuple[str, ...] = (
    'Instead of "X is Y", write "X functions as Y", "X acts as Y" or "X serves as Y".',
    'Instead of "X is true", write "X holds" or "the evidence supports X".',
    'Instead of "X is caused by Y", write "Y causes X" or "X results from Y".',
    'Instead of "there is/are", write "X exists", "we find X" or "the data contain X".',
    'Instead of "X is a member of Y", write "X belongs to Y" or "X falls under Y".',
    'Instead of "I am confident", write "I feel confident" or "the grounds support".',
    'Instead of "the answer is B", write "the answer remains B" or "the answer reads as B".',
    'Instead of passive voice ("was found"), name the actor ("the study found").',
)

NO_HAVE_ALTERNATIVES: tuple[str, ...] = (
    'Instead of "X has Y", write "X contains Y", "X includes Y" or "X holds Y".',
    'Instead of "X has happened", use the simple past: "X happened".',
    'Instead of "we have to", write "we must" or "we need to".',
    'Instead of "X had an effect", write "X affected" or "X produced an effect".',
    'Instead of "having considered", write "after considering".',
    'Instead of "X has the property P", write "X shows P" or "X exhibits P".',
    'Instead of "I have doubts", write "I doubt" or "doubts remain".',
)

METACOGNITIVE_QUESTIONS: tuple[str, ...] = (
    "What are the core elements of this problem?",
    "What assumptions am I making?",
    "Are there alternative interpretations?",
    "Does my conclusion follow necessarily from the premises?",
    "What counterarguments could undermine my answer?",
    "How strong does the evidence for each option look?",
)

NEUTRAL_ALTERNATIVES: tuple[str, ...] = (
    'Replace intensified adjectives with a precise word: "very important" -> "critical".',
    'Drop the filler when it adds nothing: "it simply follows" -> "it follows".',
    'Quantify instead of hedging: "slightly larger" -> "larger by 2 units".',
    'State certainty through evidence: "definitely wrong" -> "wrong, because ...".',
)


def _bullets(lines: Iterable[str]) -> str:
    return "\n".join(f"- {line}" for line in lines)


def _numbered(lines: Iterable[str]) -> str:
    return "\n".join(f"{i}. {line}" for i, line in enumerate(lines, 1))


_CONTROL_BLOCK = (
    "Respond in clear, natural English. Focus on accuracy and thoroughness in "
    "your reasoning."
)

_E_PRIME_BLOCK = (
    'Write your entire response in E-Prime: English without any form of the verb "to be".\n'
    "Banned forms: is, isn't, am, are, aren't, was, wasn't, were, weren't, be, been, "
    "being, and contractions of them (I'm, you're, we're, they're, it's, that's, "
    "there's, here's, what's, who's).\n"
    "Alternative phrasings:\n"
    + _bullets(E_PRIME_ALTERNATIVES)
    + "\nA checker reviews every response; if it finds a banned form you will be asked "
    "to regenerate the response.\n"
    + NON_MENTION
)

_NO_HAVE_BLOCK = (
    'Write your entire response without any form of the verb "to have".\n'
    "Banned forms: have, haven't, has, hasn't, had, hadn't, having.\n"
    "Alternative phrasings:\n"
    + _bullets(NO_HAVE_ALTERNATIVES)
    + "\n"
    + NON_MENTION
)

_ELABORATED_BLOCK = (
    "Before answering, work through these questions explicitly:\n"
    + _numbered(METACOGNITIVE_QUESTIONS)
    + "\nUse your answers to these questions to reach a well-supported conclusion."
)

_NEUTRAL_BLOCK = (
    "Do not use any of these words anywhere in your response: "
    + ", ".join(NEUTRAL_FORMS)
    + ".\nUse precise alternatives instead:\n"
    + _bullets(NEUTRAL_ALTERNATIVES)
    + "\n"
    + NON_MENTION
)

_SPECS: dict[ConditionId, ConditionSpec] = {
    ConditionId.CONTROL: ConditionSpec(
        ConditionId.CONTROL, f"{OPENING}\n\n{_CONTROL_BLOCK}", frozenset(), frozenset(), False
    ),
    ConditionId.E_PRIME: ConditionSpec(
        ConditionId.E_PRIME, f"{OPENING}\n\n{_E_PRIME_BLOCK}", E_PRIME_FORMS, frozenset(), True
    ),
    ConditionId.NO_HAVE: ConditionSpec(
        ConditionId.NO_HAVE, f"{OPENING}\n\n{_NO_HAVE_BLOCK}", NO_HAVE_FORMS, frozenset(), False
    ),
    ConditionId.ELABORATED_PROMPT: ConditionSpec(
        ConditionId.ELABORATED_PROMPT,
        f"{OPENING}\n\n{_ELABORATED_BLOCK}",
        frozenset(),
        frozenset(),
        False,
    ),
    ConditionId.NEUTRAL_BAN: ConditionSpec(
        ConditionId.NEUTRAL_BAN,
        f"{OPENING}\n\n{_NEUTRAL_BLOCK}",
        frozenset(NEUTRAL_FORMS),
        NEUTRAL_EXEMPTIONS,
        False,
    ),
}


def parse_condition(value: str | ConditionId) -> ConditionId:
    try:
        return ConditionId(value)
    except ValueError:
        known = ", ".join(c.value for c in ConditionId)
        raise ValueError(f"unknown condition {value!r} (expected one of: {known})") from None


def get_condition(cid: str | ConditionId) -> ConditionSpec:
    return _SPECS[parse_condition(cid)]


def system_prompt(cid: str | ConditionId) -> str:
    return get_condition(cid).prompt_text


def banned_lexemes(cid: str | ConditionId) -> tuple[frozenset[str], frozenset[ExemptBigram]]:
    spec = get_condition(cid)
    return spec.banned_lexemes, spec.exempt_bigrams


RETRY_TEMPLATE = (
    "Your previous response used forms of the verb \"to be\", which the constraint "
    "forbids. Offending forms:\n{items}\n"
    "Regenerate your complete response without any of these forms (or any other form "
    "of \"to be\"), keeping your reasoning and final answer format."
)


def retry_feedback(violations: "list[Violation]") -> str:
    """Build the E-Prime regeneration message.

    Each distinct offending form is listed once, with the context of its first
    occurrence.
    """
    if not violations:
        raise ValueError("retry_feedback needs at least one violation")
    seen: dict[str, str] = {}
    for v in violations:
        seen.setdefault(v.lexeme, v.context)
    items = "\n".join(
        f'- "{form}" in: "{" ".join(ctx.split())}"' for form, ctx in seen.items()
    )
    return RETRY_TEMPLATE.format(items=items)


def dump_conditions() -> list[dict]:
    """Audit view of every condition, in canonical order."""
    out = []
    for cid in ALL_CONDITIONS:
        spec = _SPECS[cid]
        out.append({
            "id": cid.value,
            "has_retry": spec.has_retry,
            "banned_lexemes": sorted(spec.banned_lexemes),
            "exempt_bigrams": sorted(
                [{"banned": r.banned, "neighbor": r.neighbor, "side": r.side}
                 for r in spec.exempt_bigrams],
                key=lambda d: (d["banned"], d["neighbor"]),
            ),
            "prompt_text": spec.prompt_text,
        })
    return out
