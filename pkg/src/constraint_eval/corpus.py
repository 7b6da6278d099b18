"""Task-item schema, bank loading/validation, and the bundled sample bank.

A bank file is one JSON document::

    {"schema_version": 1, "items": [{"id": ..., "task_type": ..., "stem": ...,
      "options": {"A": ..., ...} | null, "answer_kind": ..., "ground_truth": ...}]}

Validation is all-or-nothing: any bad item rejects the whole file.
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from constraint_eval.extraction import MULTIPLE_CHOICE, VALID_INVALID

BANK_SCHEMA_VERSION = 1
SAMPLE_BANK = "sample_bank.json"

_LETTERS = ("A", "B", "C", "D")


class TaskType(str, enum.Enum):
    SYLLOGISMS = "syllogisms"
    CAUSAL = "causal"
    ANALOGICAL = "analogical"
    CLASSIFICATION = "classification"
    EPISTEMIC = "epistemic"
    ETHICAL = "ethical"
    MATH = "math"

    def __str__(self) -> str:
        return self.value


class BankError(ValueError):
    """A task bank failed validation; ``problems`` lists every issue found."""

    def __init__(self, source: str, problems: list[str]):
        self.source = source
        self.problems = problems
        super().__init__(f"{source}: " + "; ".join(problems))


@dataclass(frozen=True)
class TaskItem:
    id: str
    task_type: TaskType
    stem: str
    answer_kind: str
    ground_truth: str
    options: Optional[dict[str, str]] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task_type": self.task_type.value,
            "stem": self.stem,
            "options": dict(self.options) if self.options is not None else None,
            "answer_kind": self.answer_kind,
            "ground_truth": self.ground_truth,
        }

    def user_prompt(self) -> str:
        parts = [self.stem.strip()]
        if self.answer_kind == VALID_INVALID:
            parts.append(
                "Decide whether the conclusion follows necessarily from the premises. "
                "Give your final answer as VALID or INVALID."
            )
        else:
            parts.append("\n".join(f"{k}) {self.options[k]}" for k in _LETTERS))
            parts.append("Give your final answer as a single letter (A, B, C, or D).")
        return "\n\n".join(parts)


def _item_problems(raw: object, index: int) -> tuple[list[str], Optional[TaskItem]]:
    where = f"item {index}"
    if not isinstance(raw, dict):
        return [f"{where}: expected an object"], None
    problems = []
    item_id = raw.get("id")
    if not isinstance(item_id, str) or not item_id:
        problems.append(f"{where}: missing or empty id")
    else:
        where = f"item {item_id!r}"
        if ":" in item_id:
            problems.append(f"{where}: id must not contain ':'")
    try:
        task_type = TaskType(raw.get("task_type"))
    except ValueError:
        problems.append(f"{where}: unknown task_type {raw.get('task_type')!r}")
        task_type = None
    stem = raw.get("stem")
    if not isinstance(stem, str) or not stem.strip():
        problems.append(f"{where}: missing stem")
    kind = raw.get("answer_kind")
    truth = raw.get("ground_truth")
    options = raw.get("options")
    if kind not in (VALID_INVALID, MULTIPLE_CHOICE):
        problems.append(f"{where}: unknown answer_kind {kind!r}")
    else:
        if task_type is not None and (kind == VALID_INVALID) != (task_type is TaskType.SYLLOGISMS):
            problems.append(f"{where}: answer_kind {kind} does not fit task_type {task_type.value}")
        allowed = ("VALID", "INVALID") if kind == VALID_INVALID else _LETTERS
        if truth not in allowed:
            problems.append(f"{where}: ground_truth {truth!r} not in {allowed}")
        if kind == MULTIPLE_CHOICE:
            if not isinstance(options, dict) or sorted(options) != list(_LETTERS):
                problems.append(f"{where}: multiple_choice item needs options A-D")
            elif not all(isinstance(v, str) and v.strip() for v in options.values()):
                problems.append(f"{where}: empty option text")
        elif options is not None:
            problems.append(f"{where}: valid_invalid item must not carry options")
    unknown = set(raw) - {"id", "task_type", "stem", "options", "answer_kind", "ground_truth"}
    if unknown:
        problems.append(f"{where}: unknown fields {sorted(unknown)}")
    if problems:
        return problems, None
    return [], TaskItem(
        id=item_id,
        task_type=task_type,
        stem=stem,
        answer_kind=kind,
        ground_truth=truth,
        options={k: options[k] for k in _LETTERS} if options is not None else None,
    )


def parse_bank(doc: object, source: str = "<bank>") -> list[TaskItem]:
    if not isinstance(doc, dict) or not isinstance(doc.get("items"), list):
        raise BankError(source, ["expected an object with an 'items' list"])
    if doc.get("schema_version") != BANK_SCHEMA_VERSION:
        raise BankError(source, [f"unsupported schema_version {doc.get('schema_version')!r}"])
    problems: list[str] = []
    items: list[TaskItem] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["items"]):
        errs, item = _item_problems(raw, i)
        problems.extend(errs)
        if item is not None:
            if item.id in seen:
                problems.append(f"duplicate id {item.id!r}")
            seen.add(item.id)
            items.append(item)
    if problems:
        raise BankError(source, problems)
    return items


def load_bank(path: str | Path) -> list[TaskItem]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BankError(str(path), [f"malformed JSON: {exc}"]) from exc
    return parse_bank(doc, str(path))


def load_sample_bank() -> list[TaskItem]:
    text = resources.files("constraint_eval.data").joinpath(SAMPLE_BANK).read_text(encoding="utf-8")
    return parse_bank(json.loads(text), SAMPLE_BANK)


def sample_bank_path() -> Path:
    return Path(str(resources.files("constraint_eval.data").joinpath(SAMPLE_BANK)))


def serialize_bank(items: Iterable[TaskItem]) -> str:
    doc = {"schema_version": BANK_SCHEMA_VERSION, "items": [it.to_dict() for it in items]}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def bank_summary(items: Iterable[TaskItem]) -> dict[str, int]:
    counts = Counter(it.task_type for it in items)
    out = {t.value: counts.get(t, 0) for t in TaskType}
    out["total"] = sum(counts.values())
    return out
