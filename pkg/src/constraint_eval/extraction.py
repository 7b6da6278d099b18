"""Answer extraction by priority cascade.

Two cascades: one for VALID/INVALID syllogism judgments, one for A-D
multiple-choice answers.  Rules are tried in priority order; within a rule the
last match wins, so a response that reconsiders its answer is scored on the
final one.  A response with no matching pattern is unscoreable, never guessed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

VALID_INVALID = "valid_invalid"
MULTIPLE_CHOICE = "multiple_choice"
ANSWER_KINDS = (VALID_INVALID, MULTIPLE_CHOICE)

CHECKMARKS = "✓✔☑✅"
EXPLANATORY_WINDOW = 40
FINAL_WINDOW = 200


@dataclass(frozen=True)
class ExtractedAnswer:
    value: Optional[str] = None
    rule: Optional[str] = None

    @property
    def scoreable(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        return {"value": self.value, "rule": self.rule, "scoreable": self.scoreable}


UNSCOREABLE = ExtractedAnswer()


@dataclass(frozen=True)
class _Hit:
    value: str
    pos: int


# ---------------------------------------------------------------- syllogisms

_VERDICT = r"(?<![\w-])(VALID|INVALID)(?![\w-])"
_VERDICT_RE = re.compile(_VERDICT, re.IGNORECASE)
_BOLD_RE = re.compile(r"\*\*(?!\s)(.+?)(?<!\s)\*\*|__(?!\s)(.+?)(?<!\s)__")
_EXPLANATORY_RE = re.compile(
    r"\b(?:make|makes|made|making|become|becomes|became|becoming|considered|deemed|"
    r"render|renders|rendered|rendering|ensure|ensures|ensured|ensuring)\b",
    re.IGNORECASE,
)
_CLAUSE_BREAK_RE = re.compile(r"[.!?:;\n]|\*\*|__")
_CONCLUSION_RE = re.compile(
    r"\b(?:conclusion|argument|syllogism)\s+(?:is|remains|stands\s+as)\s*:?\s*[*_]*\s*"
    + _VERDICT,
    re.IGNORECASE,
)
_THEREFORE_RE = re.compile(
    r"\b(?:therefore|thus)\b[^.!?\n]{0,60}?" + _VERDICT, re.IGNORECASE
)


def _explanatory(text: str, pos: int) -> bool:
    """True when a MAKE/BECOME/... verb precedes ``pos`` within the window.

    The window stops at the nearest clause break so that a verb from an
    earlier sentence cannot disqualify a later verdict.
    """
    window = text[max(0, pos - EXPLANATORY_WINDOW):pos]
    breaks = list(_CLAUSE_BREAK_RE.finditer(window))
    if breaks:
        window = window[breaks[-1].end():]
    return _EXPLANATORY_RE.search(window) is not None


def _verdicts_in(text: str, start: int, end: int) -> list[_Hit]:
    hits = []
    for m in _VERDICT_RE.finditer(text, start, end):
        if not _explanatory(text, m.start(1)):
            hits.append(_Hit(m.group(1).upper(), m.start(1)))
    return hits


def _syl_bold(text: str) -> list[_Hit]:
    hits = []
    for m in _BOLD_RE.finditer(text):
        g = 1 if m.group(1) is not None else 2
        hits.extend(_verdicts_in(text, m.start(g), m.end(g)))
    return hits


def _syl_pattern(pattern: re.Pattern) -> Callable[[str], list[_Hit]]:
    def rule(text: str) -> list[_Hit]:
        hits = []
        for m in pattern.finditer(text):
            if not _explanatory(text, m.start(1)):
                hits.append(_Hit(m.group(1).upper(), m.start(1)))
        return hits
    return rule


def _syl_standalone(text: str) -> list[_Hit]:
    return _verdicts_in(text, 0, len(text))


SYLLOGISM_RULES: tuple[tuple[str, Callable[[str], list[_Hit]]], ...] = (
    ("syl.bold", _syl_bold),
    ("syl.conclusion_framing", _syl_pattern(_CONCLUSION_RE)),
    ("syl.therefore", _syl_pattern(_THEREFORE_RE)),
    ("syl.standalone", _syl_standalone),
)

# ----------------------------------------------------------- multiple choice

_LETTER = r"([A-D])(?![\w'’-])"
_CONTEXT_WORD = r"(?i:option|answer|choice)"
_LETTER_IN_BOLD_RE = re.compile(
    r"^\s*(?:" + _CONTEXT_WORD + r"\s*:?\s*\(?" + _LETTER
    + r"|\(?([A-D])(?:\)|\.|:|\s*$|\s+[-\u2013\u2014]))"
)
_HEADER_RE = re.compile(
    r"^[ \t]*#{1,6}[ \t]*(?i:final[ \t]+)?(?i:answer)[ \t]*:?[ \t]*(?:\n[ \t]*)*"
    r"[*_]*[ \t]*\(?(?:" + _CONTEXT_WORD + r"[ \t]+)?" + _LETTER,
    re.MULTILINE,
)
_FRAMING_RES = (
    re.compile(
        r"(?i:\b(?:answer|choice|option)\s+(?:is|remains|stands\s+as|reads\s+as|would\s+be|must\s+be)"
        r"|\banswer\s*:)"
        r"\s*[*_]*\s*\(?(?:" + _CONTEXT_WORD + r"\s+)?" + _LETTER
    ),
    re.compile(
        r"(?i:\b(?:i\s+(?:would\s+)?)?(?:select|choose|pick)\s+)[*_]*\(?(?:"
        + _CONTEXT_WORD + r"\s+)?" + _LETTER
    ),
)
_BOXED_RE = re.compile(r"\\boxed\{\s*(?:\\text(?:bf)?\{\s*)?\(?([A-D])\)?\s*\}?\s*\}")
_PAREN_RE = re.compile(r"\(([A-D])\)|(?<![\w(])([A-D])\)")
_STANDALONE_RE = re.compile(r"(?<![\w'’-])" + _LETTER)
_A_CONTEXT_RE = re.compile(r"(?i:option|answer|choice)[\s:*_()\-]{0,4}$")


def _bold_letters(text: str, start: int = 0, end: Optional[int] = None) -> list[_Hit]:
    end = len(text) if end is None else end
    hits = []
    for m in _BOLD_RE.finditer(text, start, end):
        g = 1 if m.group(1) is not None else 2
        lm = _LETTER_IN_BOLD_RE.match(m.group(g))
        if lm:
            k = 1 if lm.group(1) else 2
            hits.append(_Hit(lm.group(k), m.start(g) + lm.start(k)))
    return hits


def _mc_checkmark(text: str) -> list[_Hit]:
    hits = []
    pos = 0
    for line in text.split("\n"):
        if any(c in line for c in CHECKMARKS):
            hits.extend(_bold_letters(text, pos, pos + len(line)))
        pos += len(line) + 1
    return hits


def _mc_regex(*patterns: re.Pattern) -> Callable[[str], list[_Hit]]:
    def rule(text: str) -> list[_Hit]:
        hits = []
        for pattern in patterns:
            for m in pattern.finditer(text):
                g = next(i for i in range(1, (m.lastindex or 0) + 1) if m.group(i))
                hits.append(_Hit(m.group(g), m.start(g)))
        return hits
    return rule


def _mc_standalone(text: str) -> list[_Hit]:
    offset = max(0, len(text) - FINAL_WINDOW)
    hits = []
    for m in _STANDALONE_RE.finditer(text, offset):
        if m.group(1) == "A" and not _A_CONTEXT_RE.search(text[max(0, m.start() - 20):m.start()]):
            continue  # article, not an option
        hits.append(_Hit(m.group(1), m.start(1)))
    return hits


CHOICE_RULES: tuple[tuple[str, Callable[[str], list[_Hit]]], ...] = (
    ("mc.checkmark", _mc_checkmark),
    ("mc.answer_header", _mc_regex(_HEADER_RE)),
    ("mc.framing", _mc_regex(*_FRAMING_RES)),
    ("mc.boxed", _mc_regex(_BOXED_RE)),
    ("mc.bold_letter", _bold_letters),
    ("mc.paren_letter", _mc_regex(_PAREN_RE)),
    ("mc.final_standalone", _mc_standalone),
)


def _cascade(text: str, rules) -> ExtractedAnswer:
    for name, rule in rules:
        hits = rule(text)
        if hits:
            last = max(hits, key=lambda h: h.pos)
            return ExtractedAnswer(last.value, name)
    return UNSCOREABLE


def matching_rules(text: str, answer_kind: str) -> list[str]:
    """Names of every rule that matches ``text`` (audit helper)."""
    rules = SYLLOGISM_RULES if answer_kind == VALID_INVALID else CHOICE_RULES
    return [name for name, rule in rules if rule(text)]


def extract_syllogism(text: str) -> ExtractedAnswer:
    return _cascade(text, SYLLOGISM_RULES)


def extract_choice(text: str) -> ExtractedAnswer:
    return _cascade(text, CHOICE_RULES)


def extract(answer_kind: str, text: str) -> ExtractedAnswer:
    if answer_kind == VALID_INVALID:
        return extract_syllogism(text)
    if answer_kind in (MULTIPLE_CHOICE, "mc"):
        return extract_choice(text)
    raise ValueError(f"unknown answer kind {answer_kind!r}")
