"""Lexical compliance checking for the constrained conditions.

Responses are tokenized into lowercase word tokens (internal apostrophes kept,
so "isn't" stays one token; hyphens split).  A token is a violation when it is
in the condition's banned set and no exemption bigram covers it.  The
compliance rate counts sentences free of non-exempt violations.
"""
from __future__ import annotations

import bisect
import enum
import re
from dataclasses import asdict, dataclass, field

from constraint_eval.conditions import ConditionId, ConditionSpec, get_condition

CONTEXT_WINDOW = 40

# word characters without underscore, joined by internal apostrophes
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")
# sentence ends at ., ! or ? followed by whitespace/end, or at a newline
_SENTENCE_BREAK_RE = re.compile(r"[.!?]+(?=\s|$)|\n+")


@dataclass(frozen=True)
class Token:
    text: str  # normalized: lowercase, straight apostrophe
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    return [
        Token(m.group().lower().replace("’", "'"), m.start(), m.end())
        for m in _TOKEN_RE.finditer(text)
    ]


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences that contain at least one word token."""
    spans = []
    pos = 0
    for m in _SENTENCE_BREAK_RE.finditer(text):
        spans.append((pos, m.end()))
        pos = m.end()
    spans.append((pos, len(text)))
    return [(s, e) for s, e in spans if _TOKEN_RE.search(text, s, e)]


@dataclass(frozen=True)
class Violation:
    lexeme: str
    start: int
    end: int
    context: str
    exempted: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ComplianceReport:
    condition: ConditionId
    violations: tuple[Violation, ...]
    sentence_total: int
    clean_sentences: int
    exempted: tuple[Violation, ...] = field(default=(), compare=False)

    @property
    def fully_compliant(self) -> bool:
        return not self.violations

    @property
    def compliance_rate(self) -> float:
        if self.sentence_total == 0:
            return 1.0
        return self.clean_sentences / self.sentence_total

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "violations": [v.to_dict() for v in self.violations],
            "exempted": [v.to_dict() for v in self.exempted],
            "sentence_total": self.sentence_total,
            "clean_sentences": self.clean_sentences,
            "fully_compliant": self.fully_compliant,
            "compliance_rate": self.compliance_rate,
        }


class ComplianceTier(str, enum.Enum):
    FULL = "full"
    ABOVE_90 = "above_90"
    BELOW_90 = "below_90"


def _adjacent(text: str, left: Token, right: Token) -> bool:
    # bigram only when the tokens are separated by whitespace alone
    return text[left.end:right.start].strip() == ""


def _is_exempt(text: str, tokens: list[Token], i: int, spec: ConditionSpec) -> bool:
    tok = tokens[i]
    for rule in spec.exempt_bigrams:
        if rule.banned != tok.text:
            continue
        if rule.side == "next" and i + 1 < len(tokens):
            nxt = tokens[i + 1]
            if nxt.text == rule.neighbor and _adjacent(text, tok, nxt):
                return True
        elif rule.side == "prev" and i > 0:
            prv = tokens[i - 1]
            if prv.text == rule.neighbor and _adjacent(text, prv, tok):
                return True
    return False


def find_violations(text: str, spec: ConditionSpec) -> list[Violation]:
    """Every banned-token occurrence, exempted ones included (flagged)."""
    if not spec.banned_lexemes:
        return []
    tokens = tokenize(text)
    found = []
    for i, tok in enumerate(tokens):
        if tok.text not in spec.banned_lexemes:
            continue
        lo = max(0, tok.start - CONTEXT_WINDOW)
        hi = min(len(text), tok.end + CONTEXT_WINDOW)
        found.append(Violation(
            lexeme=tok.text,
            start=tok.start,
            end=tok.end,
            context=text[lo:hi],
            exempted=_is_exempt(text, tokens, i, spec),
        ))
    return found


def check(text: str, condition: ConditionSpec | ConditionId | str) -> ComplianceReport:
    spec = condition if isinstance(condition, ConditionSpec) else get_condition(condition)
    found = find_violations(text, spec)
    active = tuple(v for v in found if not v.exempted)
    spans = sentence_spans(text)
    dirty: set[int] = set()
    starts = [s for s, _ in spans]
    for v in active:
        idx = bisect.bisect_right(starts, v.start) - 1
        if idx >= 0:
            dirty.add(idx)
    return ComplianceReport(
        condition=spec.id,
        violations=active,
        sentence_total=len(spans),
        clean_sentences=len(spans) - len(dirty),
        exempted=tuple(v for v in found if v.exempted),
    )


def compliance_tier(report: ComplianceReport) -> ComplianceTier:
    if report.fully_compliant:
        return ComplianceTier.FULL
    if report.compliance_rate > 0.9:
        return ComplianceTier.ABOVE_90
    return ComplianceTier.BELOW_90
