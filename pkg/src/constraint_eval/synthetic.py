"""Synthetic mock scripts for offline runs.

Builds a :class:`~constraint_eval.backends.MockBackend` script whose responses
look like model output: a few reasoning sentences, an answer in one of the
formats the extractor recognizes, optional constraint violations and optional
answer-less (unscoreable) replies.  Everything is a pure function of the seed.
"""
from __future__ import annotations

import random
from typing import Mapping, Optional, Sequence

from constraint_eval.backends import MOCK_SCHEMA_VERSION
from constraint_eval.conditions import ALL_CONDITIONS, ConditionId
from constraint_eval.corpus import TaskItem
from constraint_eval.extraction import VALID_INVALID
from constraint_eval.runner import TRIALS_PER_ITEM, derive_seed

# free of every banned form in every condition
CLEAN_SENTENCES = (
    "I start by restating what the problem asks.",
    "Each premise constrains the possible answers in a specific way.",
    "The key relation links the first term to the second.",
    "I check every option against the stated facts.",
    "One option fits all of the constraints at once.",
    "The remaining options each conflict with at least one fact.",
    "An alternative reading of the question leads to the same place.",
    "The evidence points toward a single conclusion.",
)

VIOLATION_SENTENCES: Mapping[ConditionId, str] = {
    ConditionId.E_PRIME: "This step is where the argument turns.",
    ConditionId.NO_HAVE: "The argument has one weak link.",
    ConditionId.NEUTRAL_BAN: "That option looks very tempting at first.",
}

DEFAULT_ACCURACY: Mapping[ConditionId, float] = {
    ConditionId.CONTROL: 0.80,
    ConditionId.E_PRIME: 0.84,
    ConditionId.NO_HAVE: 0.86,
    ConditionId.ELABORATED_PROMPT: 0.85,
    ConditionId.NEUTRAL_BAN: 0.88,
}


def answer_block(answer_kind: str, answer: str, style: int) -> str:
    if answer_kind == VALID_INVALID:
        return (
            f"**{answer}**",
            f"The conclusion stands as {answer}.",
            f"Thus, {answer}.",
            f"Verdict: {answer}",
        )[style % 4]
    return (
        f"## ANSWER\n{answer}",
        f"The best answer remains {answer}.",
        f"\\boxed{{{answer}}}",
        f"**{answer}**",
    )[style % 4]


def _wrong(item: TaskItem, rng: random.Random) -> str:
    pool = ["VALID", "INVALID"] if item.answer_kind == VALID_INVALID else ["A", "B", "C", "D"]
    return rng.choice([x for x in pool if x != item.ground_truth])


def compose(
    item: TaskItem,
    condition: ConditionId,
    correct: bool,
    violate: bool,
    scoreable: bool,
    rng: random.Random,
) -> str:
    n = rng.randint(2, 5)
    body = rng.sample(CLEAN_SENTENCES, n)
    if violate and condition in VIOLATION_SENTENCES:
        body.insert(rng.randrange(len(body) + 1), VIOLATION_SENTENCES[condition])
    text = " ".join(body)
    if scoreable:
        answer = item.ground_truth if correct else _wrong(item, rng)
        text += "\n\n" + answer_block(item.answer_kind, answer, rng.randrange(4))
    return text


def synthesize_script(
    bank: Sequence[TaskItem],
    seed: int = 42,
    accuracy: Mapping[ConditionId, float] = DEFAULT_ACCURACY,
    violation_rate: float = 0.3,
    unscoreable_rate: float = 0.05,
    error_rate: float = 0.0,
    conditions: Sequence[ConditionId] = ALL_CONDITIONS,
    trials_per_item: int = TRIALS_PER_ITEM,
    latency_s: float = 0.0,
) -> dict:
    """A full mock script covering every (item, condition, trial) slot.

    E-Prime slots whose first response violates the constraint also get a
    compliant retry response.
    """
    responses = []
    for item in bank:
        for cond in conditions:
            for idx in range(trials_per_item):
                rng = random.Random(derive_seed(seed, "mock", item.id, cond.value, idx))
                if rng.random() < error_rate:
                    responses.append(_entry(item, cond, idx, 0, None, error=True))
                    continue
                correct = rng.random() < accuracy[cond]
                violate = rng.random() < violation_rate
                scoreable = rng.random() >= unscoreable_rate
                text = compose(item, cond, correct, violate, scoreable, rng)
                responses.append(_entry(item, cond, idx, 0, text))
                if cond is ConditionId.E_PRIME and violate:
                    retry_text = compose(item, cond, rng.random() < accuracy[cond], False, True, rng)
                    responses.append(_entry(item, cond, idx, 1, retry_text))
    return {
        "schema_version": MOCK_SCHEMA_VERSION,
        "latency_s": latency_s,
        "default": None,
        "responses": responses,
    }


def _entry(item: TaskItem, cond: ConditionId, idx: int, attempt: int,
           text: Optional[str], error: bool = False) -> dict:
    entry = {
        "item_id": item.id,
        "condition": cond.value,
        "trial_index": idx,
        "attempt": attempt,
    }
    if error:
        entry["error"] = True
    else:
        entry["text"] = text
        entry["finish_reason"] = "stop"
    return entry
