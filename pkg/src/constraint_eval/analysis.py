"""The full inferential pass over a scored, filtered trial set.

Produces the pairwise comparison family (every condition pair within every
task type, BH-adjusted together), the cross-model correlation of per-task
E-Prime effects, per-model drift checks, the directional prediction check and
GEE fits pooled and per task.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from constraint_eval.conditions import ALL_CONDITIONS, ConditionId
from constraint_eval.corpus import TaskType
from constraint_eval.gee import GeeError, gee_logistic
from constraint_eval.scoring import ScoredTrial
from constraint_eval.stats import (
    ContingencyTable2x2,
    bh_fdr,
    bootstrap_ci,
    cohens_h,
    cross_model_correlation,
    fisher_exact,
    prediction_check,
    spearman_drift,
)

BOOTSTRAP_RESAMPLES = 10_000
BOOTSTRAP_SEED = 42
Q_THRESHOLD = 0.05
# |p - 0.05| below this marks a result whose significance could flip under
# another two-sided Fisher convention
NEAR_THRESHOLD = 0.01


def condition_pairs(conditions: Sequence[ConditionId] = ALL_CONDITIONS):
    """(treatment, baseline) pairs; the earlier condition is the baseline."""
    return [(b, a) for a, b in itertools.combinations(conditions, 2)]


def _outcomes(trials: Sequence[ScoredTrial]) -> dict[tuple[str, ConditionId], list[int]]:
    out: dict[tuple[str, ConditionId], list[int]] = defaultdict(list)
    for t in trials:
        if t.scoreable:
            out[(t.task_type.value, t.condition)].append(int(bool(t.correct)))
    return out


@dataclass(frozen=True)
class Comparison:
    task_type: str
    condition: ConditionId
    baseline: ConditionId
    correct: int
    n: int
    baseline_correct: int
    baseline_n: int
    delta: Optional[float]
    h: Optional[float]
    p: Optional[float]
    q: Optional[float]
    ci_low: Optional[float]
    ci_high: Optional[float]
    degenerate: bool

    @property
    def label(self) -> str:
        return f"{self.task_type}: {self.condition.value} vs {self.baseline.value}"

    @property
    def significant(self) -> bool:
        return self.q is not None and self.q < Q_THRESHOLD

    @property
    def near_threshold(self) -> bool:
        return self.p is not None and abs(self.p - 0.05) < NEAR_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "comparison": self.label,
            "task_type": self.task_type,
            "condition": self.condition.value,
            "baseline": self.baseline.value,
            "correct": self.correct,
            "n": self.n,
            "baseline_correct": self.baseline_correct,
            "baseline_n": self.baseline_n,
            "delta": self.delta,
            "h": self.h,
            "p": self.p,
            "q": self.q,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "degenerate": self.degenerate,
            "significant": self.significant,
            "near_threshold": self.near_threshold,
        }


def compare_cells(
    task_type: str,
    condition: ConditionId,
    baseline: ConditionId,
    a: Sequence[int],
    b: Sequence[int],
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = BOOTSTRAP_SEED,
) -> Comparison:
    """One unadjusted comparison (q filled in later across the family)."""
    ka, na, kb, nb = sum(a), len(a), sum(b), len(b)
    if na == 0 or nb == 0:
        return Comparison(task_type, condition, baseline, ka, na, kb, nb,
                          None, None, None, None, None, None, True)
    table = ContingencyTable2x2.from_counts(ka, na, kb, nb)
    pa, pb = ka / na, kb / nb
    lo, hi = bootstrap_ci(a, b, resamples=resamples, seed=seed)
    return Comparison(task_type, condition, baseline, ka, na, kb, nb,
                      pa - pb, cohens_h(pa, pb), fisher_exact(table), None, lo, hi,
                      table.degenerate)


def pairwise_family(
    trials: Sequence[ScoredTrial],
    conditions: Sequence[ConditionId] = ALL_CONDITIONS,
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = BOOTSTRAP_SEED,
) -> list[Comparison]:
    """All condition pairs within all task types, BH-adjusted as one family.

    Comparisons with an empty cell carry no p and stay out of the family.
    """
    cells = _outcomes(trials)
    comps = []
    for task in TaskType:
        for cond, base in condition_pairs(conditions):
            comps.append(compare_cells(task.value, cond, base,
                                       cells.get((task.value, cond), []),
                                       cells.get((task.value, base), []),
                                       resamples, seed))
    testable = [i for i, c in enumerate(comps) if c.p is not None]
    if testable:
        q = bh_fdr([comps[i].p for i in testable])
        for i, qi in zip(testable, q):
            comps[i] = Comparison(**{**comps[i].__dict__, "q": float(qi)})
    return comps


def eprime_effects(trials: Sequence[ScoredTrial]) -> dict[str, dict[str, Optional[float]]]:
    """Per model, per task: accuracy(e_prime) - accuracy(control)."""
    counts: dict[tuple[str, str, ConditionId], list[int]] = defaultdict(lambda: [0, 0])
    for t in trials:
        if t.scoreable and t.condition in (ConditionId.E_PRIME, ConditionId.CONTROL):
            c = counts[(t.model_id, t.task_type.value, t.condition)]
            c[0] += bool(t.correct)
            c[1] += 1
    models = sorted({m for m, _, _ in counts})
    out = {}
    for m in models:
        row = {}
        for task in TaskType:
            e = counts.get((m, task.value, ConditionId.E_PRIME))
            c = counts.get((m, task.value, ConditionId.CONTROL))
            row[task.value] = (e[0] / e[1] - c[0] / c[1]) if e and c else None
        out[m] = row
    return out


def correlation_report(trials: Sequence[ScoredTrial]) -> dict:
    effects = eprime_effects(trials)
    complete = {m: v for m, v in effects.items() if all(x is not None for x in v.values())}
    if len(complete) < 2:
        return {"models": sorted(effects), "pairs": [], "mean_r": None, "range": None,
                "note": "needs at least two models with E-Prime and control data on every task"}
    cm = cross_model_correlation({m: list(v.values()) for m, v in complete.items()})
    return {
        "models": list(cm.models),
        "pairs": [{"model_a": a, "model_b": b, "r": r} for a, b, r in cm.pairs],
        "mean_r": cm.mean,
        "range": list(cm.range) if cm.range else None,
        "effects": complete,
        "note": None,
    }


def drift_report(trials: Sequence[ScoredTrial]) -> list[dict]:
    """Spearman correlation of correctness against run order, per model and condition."""
    groups: dict[tuple[str, ConditionId], list[ScoredTrial]] = defaultdict(list)
    for t in trials:
        if t.scoreable:
            groups[(t.model_id, t.condition)].append(t)
    out = []
    for (model, cond) in sorted(groups, key=lambda k: (k[0], ALL_CONDITIONS.index(k[1]))):
        seq = sorted(groups[(model, cond)], key=lambda t: t.sequence)
        y = [int(bool(t.correct)) for t in seq]
        row = {"model_id": model, "condition": cond.value, "n": len(y),
               "accuracy": sum(y) / len(y), "rho": None, "p": None, "defined": False}
        if len(y) >= 3:
            rho, p = spearman_drift(y)
            if not math.isnan(rho):
                row.update(rho=rho, p=p, defined=True)
        out.append(row)
    return out


def prediction_report(trials: Sequence[ScoredTrial]) -> dict:
    cells = _outcomes(trials)
    deltas = {}
    for task in TaskType:
        e = cells.get((task.value, ConditionId.E_PRIME))
        c = cells.get((task.value, ConditionId.CONTROL))
        if e and c:
            deltas[task.value] = sum(e) / len(e) - sum(c) / len(c)
    pc = prediction_check(deltas)
    return {
        "hits": pc.hits,
        "total": pc.total,
        "binomial_p": None if math.isnan(pc.p) else pc.p,
        "outcomes": [
            {"task_type": t, "predicted": d, "delta": v, "hit": h}
            for t, d, v, h in pc.outcomes
        ],
    }


def _gee_record(scope: str, trials: Sequence[ScoredTrial]) -> dict:
    rows = [t for t in trials if t.scoreable]
    conds = {t.condition for t in rows}
    base = {"scope": scope, "n_obs": len(rows)}
    if ConditionId.CONTROL not in conds or len(conds) < 2:
        return {**base, "status": "skipped", "reason": "needs control and one other condition"}
    try:
        fit = gee_logistic(
            [int(bool(t.correct)) for t in rows],
            [t.condition.value for t in rows],
            [t.item_id for t in rows],
            reference=ConditionId.CONTROL.value,
            levels=[c.value for c in ALL_CONDITIONS],
        )
    except GeeError as exc:
        return {**base, "status": "error", "reason": str(exc)}
    terms = fit.to_records()
    if fit.separated:
        # estimates run off toward infinity; inference on them is meaningless
        terms = [{**t, "robust_se": None, "model_se": None, "z": None, "p": None} for t in terms]
        status = "separated"
    else:
        status = "ok" if fit.converged else "not_converged"
    return {
        **base,
        "status": status,
        "n_clusters": fit.n_clusters,
        "alpha": fit.alpha,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "separated": list(fit.separated),
        "terms": terms,
    }


def gee_report(trials: Sequence[ScoredTrial]) -> list[dict]:
    out = [_gee_record("pooled", trials)]
    for task in TaskType:
        sub = [t for t in trials if t.task_type is task]
        if sub:
            out.append(_gee_record(task.value, sub))
    return out


def _nan_to_none(x):
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return None
    if isinstance(x, dict):
        return {k: _nan_to_none(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_nan_to_none(v) for v in x]
    if isinstance(x, np.generic):
        return _nan_to_none(x.item())
    return x


def analyze(
    trials: Sequence[ScoredTrial],
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = BOOTSTRAP_SEED,
) -> dict[str, list[dict]]:
    """Every analysis product as lists of JSON-ready records."""
    trials = sorted(trials, key=lambda t: (t.trial_id, t.attempt))
    corr = correlation_report(trials)
    return _nan_to_none({
        "comparisons": [c.to_dict() for c in pairwise_family(trials, resamples=resamples, seed=seed)],
        "correlation": [corr],
        "drift": drift_report(trials),
        "prediction": [prediction_report(trials)],
        "gee": gee_report(trials),
    })
