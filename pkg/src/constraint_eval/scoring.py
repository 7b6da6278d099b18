"""Trial scoring, filtering policies and summary tables.

A scored trial combines answer extraction, the compliance check and a word
count.  Unscoreable trials never enter an accuracy denominator.  The three
compliance policies mirror the intent-to-treat, >90% and 100% thresholds;
the unconstrained conditions pass all of them.
"""
from __future__ import annotations

import enum
import math
import re
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from constraint_eval.compliance import ComplianceTier, check, compliance_tier
from constraint_eval.conditions import ALL_CONDITIONS, ConditionId, ConditionSpec, get_condition
from constraint_eval.corpus import TaskItem, TaskType
from constraint_eval.extraction import ExtractedAnswer, extract
from constraint_eval.store import STATUS_OK, TrialRecord, dedup

_EMPHASIS_RE = re.compile(r"[*_]+")


def word_count(text: str) -> int:
    return len(_EMPHASIS_RE.sub("", text).split())


@dataclass(frozen=True)
class ScoredTrial:
    trial_id: str
    item_id: str
    model_id: str
    condition: ConditionId
    trial_index: int
    temperature: float
    sequence: int
    attempt: int
    task_type: TaskType
    ground_truth: str
    extracted: ExtractedAnswer
    violations: int
    compliance_rate: float
    tier: ComplianceTier
    word_count: int
    retried: bool = False
    rules: tuple = field(default=(), compare=False)

    @property
    def scoreable(self) -> bool:
        return self.extracted.scoreable

    @property
    def correct(self) -> Optional[bool]:
        if not self.scoreable:
            return None
        return self.extracted.value == self.ground_truth

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "item_id": self.item_id,
            "model_id": self.model_id,
            "condition": self.condition.value,
            "trial_index": self.trial_index,
            "temperature": self.temperature,
            "sequence": self.sequence,
            "attempt": self.attempt,
            "task_type": self.task_type.value,
            "ground_truth": self.ground_truth,
            "extracted": self.extracted.value,
            "rule": self.extracted.rule,
            "scoreable": self.scoreable,
            "correct": self.correct,
            "violations": self.violations,
            "compliance_rate": self.compliance_rate,
            "tier": self.tier.value,
            "word_count": self.word_count,
            "retried": self.retried,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScoredTrial":
        return cls(
            trial_id=d["trial_id"],
            item_id=d["item_id"],
            model_id=d["model_id"],
            condition=ConditionId(d["condition"]),
            trial_index=d["trial_index"],
            temperature=d["temperature"],
            sequence=d["sequence"],
            attempt=d["attempt"],
            task_type=TaskType(d["task_type"]),
            ground_truth=d["ground_truth"],
            extracted=ExtractedAnswer(d["extracted"], d["rule"]),
            violations=d["violations"],
            compliance_rate=d["compliance_rate"],
            tier=ComplianceTier(d["tier"]),
            word_count=d["word_count"],
            retried=d.get("retried", False),
        )


def score_trial(
    record: TrialRecord,
    item: TaskItem,
    condition_spec: Optional[ConditionSpec] = None,
    retried: bool = False,
) -> ScoredTrial:
    if record.item_id != item.id:
        raise ValueError(f"record {record.trial_id} is for item {record.item_id}, not {item.id}")
    if record.status != STATUS_OK:
        raise ValueError(f"record {record.trial_id} has status {record.status}; only ok records score")
    spec = condition_spec or get_condition(record.condition)
    text = record.response_text or ""
    report = check(text, spec)
    return ScoredTrial(
        trial_id=record.trial_id,
        item_id=record.item_id,
        model_id=record.model_id,
        condition=record.condition,
        trial_index=record.trial_index,
        temperature=record.temperature,
        sequence=record.sequence,
        attempt=record.attempt,
        task_type=item.task_type,
        ground_truth=item.ground_truth,
        extracted=extract(item.answer_kind, text),
        violations=len(report.violations),
        compliance_rate=report.compliance_rate,
        tier=compliance_tier(report),
        word_count=word_count(text),
        retried=retried,
    )


def score_records(records: Iterable[TrialRecord], items: Mapping[str, TaskItem]) -> list[ScoredTrial]:
    """Score the deduplicated ok records of a store, in trial-id order."""
    out = []
    for tid, ts in sorted(dedup(records).items()):
        item = items.get(ts.first.item_id)
        if item is None:
            raise ValueError(f"record {tid} refers to unknown item {ts.first.item_id!r}")
        has_retry = ts.retry is not None
        out.append(score_trial(ts.first, item, retried=has_retry))
        if has_retry and ts.retry.status == STATUS_OK:
            out.append(score_trial(ts.retry, item))
    return out


class Compliance(str, enum.Enum):
    INTENT_TO_TREAT = "intent_to_treat"
    ABOVE_90 = "above_90"
    FULL = "full"


@dataclass(frozen=True)
class FilterPolicy:
    first_pass_only: bool = True
    require_scoreable: bool = True
    compliance: Compliance = Compliance.FULL

    @property
    def name(self) -> str:
        return {Compliance.FULL: "full", Compliance.ABOVE_90: "above90",
                Compliance.INTENT_TO_TREAT: "itt"}[self.compliance]


PRIMARY = FilterPolicy(True, True, Compliance.FULL)
ABOVE_90 = FilterPolicy(True, True, Compliance.ABOVE_90)
INTENT_TO_TREAT = FilterPolicy(True, True, Compliance.INTENT_TO_TREAT)
POLICIES = {"full": PRIMARY, "above90": ABOVE_90, "itt": INTENT_TO_TREAT}

_ALLOWED_TIERS = {
    Compliance.FULL: {ComplianceTier.FULL},
    Compliance.ABOVE_90: {ComplianceTier.FULL, ComplianceTier.ABOVE_90},
    Compliance.INTENT_TO_TREAT: set(ComplianceTier),
}


def filter_trials(scored: Iterable[ScoredTrial], policy: FilterPolicy = PRIMARY) -> list[ScoredTrial]:
    allowed = _ALLOWED_TIERS[policy.compliance]
    return [
        t for t in scored
        if (not policy.first_pass_only or t.attempt == 0)
        and (not policy.require_scoreable or t.scoreable)
        and t.tier in allowed
    ]


@dataclass(frozen=True)
class Cell:
    correct: int
    n: int

    @property
    def accuracy(self) -> Optional[float]:
        return self.correct / self.n if self.n else None


TOTAL = "TOTAL"


@dataclass(frozen=True)
class AccuracyTable:
    row_key: str
    rows: tuple[str, ...]
    columns: tuple[ConditionId, ...]
    cells: Mapping[tuple[str, ConditionId], Cell]

    def cell(self, row: str, col: ConditionId | str) -> Cell:
        return self.cells.get((row, ConditionId(col)), Cell(0, 0))

    def to_records(self) -> list[dict]:
        out = []
        for row in (*self.rows, TOTAL):
            for col in self.columns:
                c = self.cell(row, col)
                out.append({self.row_key: row, "condition": col.value,
                            "correct": c.correct, "n": c.n, "accuracy": c.accuracy})
        return out


def _row_value(t: ScoredTrial, rows: str) -> str:
    if rows == "task_type":
        return t.task_type.value
    if rows == "model":
        return t.model_id
    raise ValueError(f"rows must be 'task_type' or 'model', got {rows!r}")


def accuracy_table(
    scored: Iterable[ScoredTrial],
    rows: str = "task_type",
    columns: Sequence[ConditionId] = ALL_CONDITIONS,
) -> AccuracyTable:
    """Accuracy = correct / scoreable per cell, plus a pooled TOTAL row."""
    counts: dict[tuple[str, ConditionId], list[int]] = defaultdict(lambda: [0, 0])
    seen_rows = set()
    for t in scored:
        if not t.scoreable or t.condition not in columns:
            continue
        row = _row_value(t, rows)
        seen_rows.add(row)
        for key in ((row, t.condition), (TOTAL, t.condition)):
            counts[key][0] += bool(t.correct)
            counts[key][1] += 1
    if rows == "task_type":
        order = tuple(tt.value for tt in TaskType if tt.value in seen_rows)
    else:
        order = tuple(sorted(seen_rows))
    cells = {k: Cell(c, n) for k, (c, n) in counts.items()}
    return AccuracyTable(rows, order, tuple(columns), cells)


@dataclass(frozen=True)
class ItemDeltas:
    condition_a: ConditionId
    condition_b: ConditionId
    deltas: tuple[tuple[str, float], ...]

    @property
    def values(self) -> list[float]:
        return [d for _, d in self.deltas]

    def summary(self) -> dict:
        v = self.values
        if not v:
            return {"n_items": 0}
        return {
            "n_items": len(v),
            "mean": statistics.fmean(v),
            "median": statistics.median(v),
            "sd": statistics.stdev(v) if len(v) > 1 else 0.0,
            "min": min(v),
            "max": max(v),
            "improved": sum(d > 0 for d in v),
            "equal": sum(d == 0 for d in v),
            "worse": sum(d < 0 for d in v),
        }


def per_item_deltas(
    scored: Iterable[ScoredTrial],
    condition_a: ConditionId | str,
    condition_b: ConditionId | str,
) -> ItemDeltas:
    """accuracy(A) - accuracy(B) per item, over items scoreable under both."""
    ca, cb = ConditionId(condition_a), ConditionId(condition_b)
    counts: dict[tuple[str, ConditionId], list[int]] = defaultdict(lambda: [0, 0])
    for t in scored:
        if t.scoreable and t.condition in (ca, cb):
            c = counts[(t.item_id, t.condition)]
            c[0] += bool(t.correct)
            c[1] += 1
    items = sorted({i for i, _ in counts})
    deltas = []
    for item in items:
        a, b = counts.get((item, ca)), counts.get((item, cb))
        if a and b:
            # exact zero for identical proportions
            deltas.append((item, 0.0 if a[0] * b[1] == b[0] * a[1] else a[0] / a[1] - b[0] / b[1]))
    return ItemDeltas(ca, cb, tuple(deltas))


@dataclass(frozen=True)
class RetryRow:
    model_id: str
    n: int
    retried: int
    first_pass: Cell
    retried_cell: Cell

    @property
    def rate(self) -> float:
        return self.retried / self.n if self.n else math.nan

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "n": self.n,
            "retried": self.retried,
            "rate": self.rate,
            "first_pass_accuracy": self.first_pass.accuracy,
            "first_pass_n": self.first_pass.n,
            "retried_accuracy": self.retried_cell.accuracy,
            "retried_n": self.retried_cell.n,
        }


def retry_summary(scored: Iterable[ScoredTrial]) -> list[RetryRow]:
    """Per-model E-Prime retry rates and accuracies.

    ``n`` counts first-pass E-Prime trials and ``retried`` those that drew a
    retry.  First-pass accuracy covers scoreable first passes that needed no
    retry; retried accuracy covers scoreable retry responses only.
    """
    by_model: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0, 0, 0, 0])
    for t in scored:
        if t.condition is not ConditionId.E_PRIME:
            continue
        row = by_model[t.model_id]
        if t.attempt == 0:
            row[0] += 1
            row[1] += t.retried
            if not t.retried and t.scoreable:
                row[2] += bool(t.correct)
                row[3] += 1
        elif t.scoreable:
            row[4] += bool(t.correct)
            row[5] += 1
    return [
        RetryRow(m, r[0], r[1], Cell(r[2], r[3]), Cell(r[4], r[5]))
        for m, r in sorted(by_model.items())
    ]


@dataclass(frozen=True)
class MeanTable:
    rows: tuple[str, ...]
    columns: tuple[ConditionId, ...]
    means: Mapping[tuple[str, ConditionId], tuple[float, int]]

    def mean(self, row: str, col: ConditionId | str) -> Optional[float]:
        v = self.means.get((row, ConditionId(col)))
        return v[0] if v else None

    def to_records(self) -> list[dict]:
        return [
            {"task_type": r, "condition": c.value,
             "mean_words": self.mean(r, c), "n": self.means.get((r, c), (None, 0))[1]}
            for r in self.rows for c in self.columns
        ]


def wordcount_table(
    scored: Iterable[ScoredTrial],
    columns: Sequence[ConditionId] = ALL_CONDITIONS,
) -> MeanTable:
    """Mean word count by task type and condition, scoreable first passes only."""
    acc: dict[tuple[str, ConditionId], list[int]] = defaultdict(lambda: [0, 0])
    for t in scored:
        if t.attempt != 0 or not t.scoreable or t.condition not in columns:
            continue
        a = acc[(t.task_type.value, t.condition)]
        a[0] += t.word_count
        a[1] += 1
    present = {r for r, _ in acc}
    rows = tuple(tt.value for tt in TaskType if tt.value in present)
    return MeanTable(rows, tuple(columns), {k: (s / n, n) for k, (s, n) in acc.items()})
