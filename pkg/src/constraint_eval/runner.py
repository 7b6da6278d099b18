"""Trial planning and execution.

Each (item, model, condition) gets ``trials_per_item`` trials: index 0 at the
deterministic temperature, the rest at the sampling temperature.  Per-model
trial order is shuffled with a generator seeded from the global seed and the
model id, and per-trial request seeds are a pure function of the global seed
and the trial id, so completion order never changes any request.

Only E-Prime retries on content: when the first pass violates the constraint
the model gets one regeneration request carrying the feedback message.
Transport failures are retried separately, with exponential backoff.
"""
from __future__ import annotations

import hashlib
import logging
import random
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable, Mapping, Optional, Sequence

from constraint_eval.backends import Backend, BackendError
from constraint_eval.compliance import check
from constraint_eval.conditions import (
    ALL_CONDITIONS,
    ConditionId,
    ConditionSpec,
    get_condition,
    retry_feedback,
)
from constraint_eval.corpus import TaskItem
from constraint_eval.store import (
    STATUS_API_ERROR,
    STATUS_EMPTY,
    STATUS_OK,
    RecordStore,
    TrialPlan,
    TrialRecord,
    dedup,
)

log = logging.getLogger(__name__)

TRIALS_PER_ITEM = 4
TEMPERATURES = (0.0, 0.7)
MAX_TOKENS = 2048
GLOBAL_SEED = 42
TRANSPORT_RETRIES = 3
BACKOFF_S = 1.0


def derive_seed(*parts: object) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def make_trial_id(model_id: str, condition: ConditionId, item_id: str, index: int) -> str:
    return f"{model_id}:{condition.value}:{item_id}:{index}"


def plan_trials(
    bank: Sequence[TaskItem],
    model_ids: Sequence[str],
    conditions: Sequence[ConditionId | str] = ALL_CONDITIONS,
    global_seed: int = GLOBAL_SEED,
    trials_per_item: int = TRIALS_PER_ITEM,
    temperatures: tuple[float, float] = TEMPERATURES,
    max_tokens: int = MAX_TOKENS,
) -> list[TrialPlan]:
    if not bank:
        raise ValueError("cannot plan trials for an empty bank")
    if not model_ids:
        raise ValueError("need at least one model id")
    dupes = {m for m in model_ids if list(model_ids).count(m) > 1}
    if dupes:
        raise ValueError(f"duplicate model ids: {sorted(dupes)}")
    for m in model_ids:
        if ":" in m:
            raise ValueError(f"model id {m!r} must not contain ':'")
    conds = [ConditionId(c) for c in conditions]
    if trials_per_item < 1:
        raise ValueError("trials_per_item must be positive")
    first_temp, rest_temp = temperatures

    plans: list[TrialPlan] = []
    for model_id in model_ids:
        slots = [
            (item.id, cond, idx)
            for item in bank
            for cond in conds
            for idx in range(trials_per_item)
        ]
        random.Random(derive_seed(global_seed, "order", model_id)).shuffle(slots)
        for seq, (item_id, cond, idx) in enumerate(slots):
            tid = make_trial_id(model_id, cond, item_id, idx)
            plans.append(TrialPlan(
                trial_id=tid,
                item_id=item_id,
                model_id=model_id,
                condition=cond,
                trial_index=idx,
                temperature=first_temp if idx == 0 else rest_temp,
                max_tokens=max_tokens,
                request_seed=derive_seed(global_seed, tid),
                sequence=seq,
            ))
    return plans


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class TransportPolicy:
    retries: int = TRANSPORT_RETRIES
    backoff_s: float = BACKOFF_S
    sleep: Callable[[float], None] = time.sleep


def _attempt(
    plan: TrialPlan,
    backend: Backend,
    system: str,
    user: str,
    attempt: int,
    seed: int,
    policy: TransportPolicy,
) -> TrialRecord:
    started = _now()
    context = {
        "item_id": plan.item_id,
        "condition": plan.condition.value,
        "trial_index": plan.trial_index,
        "attempt": attempt,
        "model_id": plan.model_id,
    }
    error = None
    for k in range(policy.retries + 1):
        try:
            out = backend.complete(
                system, user,
                temperature=plan.temperature, seed=seed,
                max_tokens=plan.max_tokens, context=context,
            )
        except BackendError as exc:
            error = str(exc)
            if k < policy.retries:
                policy.sleep(policy.backoff_s * 2**k)
            continue
        status = STATUS_OK if out.text and out.text.strip() else STATUS_EMPTY
        return TrialRecord(
            **plan.to_dict() | {"condition": plan.condition},
            attempt=attempt,
            status=status,
            response_text=out.text if status == STATUS_OK else None,
            finish_reason=out.finish_reason if status == STATUS_OK else None,
            started_at=started,
            completed_at=_now(),
        )
    return TrialRecord(
        **plan.to_dict() | {"condition": plan.condition},
        attempt=attempt,
        status=STATUS_API_ERROR,
        response_text=None,
        finish_reason=None,
        started_at=started,
        completed_at=_now(),
        error=error,
    )


def retry_prompt(user_prompt: str, previous: str, feedback: str) -> str:
    return (
        f"{user_prompt}\n\n---\nYour previous response:\n{previous}\n---\n\n{feedback}"
    )


def execute_trial(
    plan: TrialPlan,
    item: TaskItem,
    backend: Backend,
    condition_spec: Optional[ConditionSpec] = None,
    policy: Optional[TransportPolicy] = None,
) -> list[TrialRecord]:
    """Run one trial; returns the first-pass record and, for E-Prime, the retry."""
    if item.id != plan.item_id:
        raise ValueError(f"item {item.id!r} does not match plan item {plan.item_id!r}")
    spec = condition_spec or get_condition(plan.condition)
    policy = policy or TransportPolicy()
    user = item.user_prompt()
    first = _attempt(plan, backend, spec.prompt_text, user, 0, plan.request_seed, policy)
    if not spec.has_retry or first.status != STATUS_OK:
        return [first]
    report = check(first.response_text, spec)
    if report.fully_compliant:
        return [first]
    retry_user = retry_prompt(user, first.response_text, retry_feedback(list(report.violations)))
    second = _attempt(plan, backend, spec.prompt_text, retry_user, 1, plan.request_seed + 1, policy)
    return [first, second]


def completed_trials(records: Iterable[TrialRecord]) -> set[str]:
    """Trial ids whose record set is complete (resume skips these)."""
    done = set()
    for tid, ts in dedup(records).items():
        spec = get_condition(ts.first.condition)
        if spec.has_retry and ts.retry is None and not check(ts.first.response_text, spec).fully_compliant:
            continue  # retry lost to an interruption
        done.add(tid)
    return done


@dataclass
class RunSummary:
    planned: int
    skipped: int
    executed: int
    api_errors: int


def run(
    plans: Sequence[TrialPlan],
    items: Mapping[str, TaskItem],
    backends: Mapping[str, Backend],
    store: RecordStore,
    max_in_flight: int = 4,
    policy: Optional[TransportPolicy] = None,
    fsync: bool = False,
) -> RunSummary:
    """Execute every plan not yet complete in ``store``.

    Workers run trials concurrently; this thread is the only writer and
    appends each trial's records in one write as it completes.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")
    missing = {p.model_id for p in plans} - set(backends)
    if missing:
        raise ValueError(f"no backend for models: {sorted(missing)}")
    store.repair_tail()
    done = completed_trials(store.load())
    todo = [p for p in plans if p.trial_id not in done]
    summary = RunSummary(len(plans), len(plans) - len(todo), 0, 0)
    log.info("run: %d planned, %d already complete", len(plans), summary.skipped)

    def work(plan: TrialPlan) -> list[TrialRecord]:
        return execute_trial(plan, items[plan.item_id], backends[plan.model_id], policy=policy)

    pending_iter = iter(todo)
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        in_flight = set()

        def refill() -> None:
            while len(in_flight) < max_in_flight:
                plan = next(pending_iter, None)
                if plan is None:
                    return
                in_flight.add(pool.submit(work, plan))

        refill()
        try:
            while in_flight:
                finished, _ = wait(in_flight, return_when=FIRST_COMPLETED)
                for fut in finished:
                    in_flight.discard(fut)
                    records = fut.result()
                    store.append(records, fsync=fsync)
                    summary.executed += 1
                    summary.api_errors += any(r.status == STATUS_API_ERROR for r in records)
                refill()
        except BaseException:
            for fut in in_flight:
                fut.cancel()
            raise
    return summary
