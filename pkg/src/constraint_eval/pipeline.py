"""Stage functions shared by the command line and the demo scripts.

Layout under a run's output directory::

    plan.jsonl        planned trials
    trials.jsonl      append-only trial record store
    scored/           per-trial scores and accuracy tables
    analysis/         comparisons, correlation, drift, prediction check, GEE
    qual/             qualitative coding of ethical-dilemma responses
    report/report.md  the combined report
    .stages/<stage>   completion markers used to resume a pipeline
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from constraint_eval import analysis as an
from constraint_eval import tables
from constraint_eval.artifacts import header, read_jsonl, write_jsonl, write_text
from constraint_eval.backends import Backend, MockBackend, build_backend
from constraint_eval.conditions import ALL_CONDITIONS, ConditionId
from constraint_eval.config import RunConfig, config_hash
from constraint_eval.corpus import TaskItem, TaskType, load_bank
from constraint_eval.qualcode import PatternSet, aggregate_qual, code_response, default_patterns
from constraint_eval.runner import RunSummary, TransportPolicy, plan_trials, run
from constraint_eval.scoring import (
    POLICIES,
    ScoredTrial,
    accuracy_table,
    filter_trials,
    per_item_deltas,
    retry_summary,
    score_records,
    wordcount_table,
)
from constraint_eval.store import RecordStore, dedup

log = logging.getLogger(__name__)

STAGES = ("plan", "run", "score", "analyze", "qualcode", "report")
STORE_FILE = "trials.jsonl"
PLAN_FILE = "plan.jsonl"
HIST_BINS = 8


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _provenance(head: Optional[Mapping]) -> tuple[Optional[str], Optional[int]]:
    if not head:
        return None, None
    return head.get("config_hash"), head.get("global_seed")


# plan / run

def write_plan(cfg: RunConfig, bank: list[TaskItem], path: Path) -> int:
    plans = plan_trials(bank, cfg.model_ids, cfg.conditions, cfg.global_seed,
                        cfg.trials_per_item, cfg.temperatures, cfg.max_tokens)
    write_jsonl(path, header("plan", cfg.config_hash, cfg.global_seed),
                (p.to_dict() for p in plans))
    return len(plans)


def backends_for(cfg: RunConfig, mock_script: Optional[Path] = None) -> dict[str, Backend]:
    if mock_script is not None:
        mock = MockBackend.from_file(mock_script)
        return {m: mock for m in cfg.model_ids}
    return {m.id: build_backend(m.definition(), cfg.base_dir) for m in cfg.models}


def run_trials(
    cfg: RunConfig,
    store_path: Path,
    bank: Optional[list[TaskItem]] = None,
    mock_script: Optional[Path] = None,
    max_in_flight: Optional[int] = None,
    policy: Optional[TransportPolicy] = None,
    fsync: bool = True,
) -> RunSummary:
    bank = bank if bank is not None else load_bank(cfg.bank)
    plans = plan_trials(bank, cfg.model_ids, cfg.conditions, cfg.global_seed,
                        cfg.trials_per_item, cfg.temperatures, cfg.max_tokens)
    store = RecordStore(store_path)
    store.ensure_header(header("trials", cfg.config_hash, cfg.global_seed))
    return run(plans, {i.id: i for i in bank}, backends_for(cfg, mock_script), store,
               max_in_flight=max_in_flight or cfg.max_in_flight, policy=policy, fsync=fsync)


# score

def _histogram(values: list[float]) -> dict:
    counts, edges = np.histogram(values, bins=HIST_BINS, range=(-1.0, 1.0))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def score_store(store_path: Path, bank_path: Path, policy_name: str, out_dir: Path) -> list[ScoredTrial]:
    if policy_name not in POLICIES:
        raise ValueError(f"policy must be one of {sorted(POLICIES)}")
    store = RecordStore(store_path)
    if not store_path.is_file():
        raise FileNotFoundError(f"missing input: {store_path}")
    bank = load_bank(bank_path)
    chash, seed = _provenance(store.header())
    scored = sorted(score_records(store.load(), {i.id: i for i in bank}),
                    key=lambda t: (t.trial_id, t.attempt))
    policy = POLICIES[policy_name]

    def head(name: str, **extra) -> dict:
        return header(name, chash, seed, policy=policy_name, **extra)

    write_jsonl(out_dir / "scored.jsonl", head("scored"), (t.to_dict() for t in scored))
    text = []
    for name, pol in POLICIES.items():
        table = accuracy_table(filter_trials(scored, pol))
        recs = table.to_records()
        write_jsonl(out_dir / f"accuracy_{name}.jsonl", head(f"accuracy_{name}", tier=name), recs)
        text.append(tables.accuracy_grid(recs, "task_type", f"Accuracy by task type, tier={name}"))
    primary = filter_trials(scored, policy)
    by_model = accuracy_table(primary, rows="model").to_records()
    write_jsonl(out_dir / "accuracy_by_model.jsonl", head("accuracy_by_model"), by_model)
    text.append(tables.accuracy_grid(by_model, "model", f"Accuracy by model, tier={policy_name}"))

    words = wordcount_table(primary).to_records()
    write_jsonl(out_dir / "wordcount.jsonl", head("wordcount"), words)
    text.append(tables.mean_grid(words, "mean_words", title="Mean word count"))

    retry = [r.to_dict() for r in retry_summary(scored)]
    write_jsonl(out_dir / "retry.jsonl", head("retry"), retry)
    text.append(tables.records_table(retry, [
        ("model", "model_id"), ("n", "n"), ("retried", "retried"), ("rate", "rate"),
        ("first-pass acc", "first_pass_accuracy"), ("retried acc", "retried_accuracy"),
    ], "E-Prime retries") if retry else "E-Prime retries\n(no E-Prime trials)")

    deltas = []
    for cond in ALL_CONDITIONS[1:]:
        d = per_item_deltas(primary, cond, ConditionId.CONTROL)
        deltas.append({"condition": cond.value, "baseline": ConditionId.CONTROL.value,
                       **d.summary(), "deltas": [[i, v] for i, v in d.deltas],
                       "histogram": _histogram(d.values)})
    write_jsonl(out_dir / "item_deltas.jsonl", head("item_deltas"), an._nan_to_none(deltas))
    text.append(tables.records_table(deltas, [
        ("condition", "condition"), ("items", "n_items"), ("mean", "mean"), ("median", "median"),
        ("improved", "improved"), ("equal", "equal"), ("worse", "worse"),
    ], "Per-item accuracy deltas vs control"))
    write_text(out_dir / "tables.txt", "\n\n".join(text))
    return scored


def load_scored(scored_dir: Path) -> tuple[dict, list[ScoredTrial]]:
    head, rows = read_jsonl(scored_dir / "scored.jsonl")
    return head, [ScoredTrial.from_dict(r) for r in rows]


# analyze

def analyze_scored(scored_dir: Path, out_dir: Path, resamples: int = an.BOOTSTRAP_RESAMPLES) -> dict:
    head, scored = load_scored(scored_dir)
    policy_name = head.get("policy", "full")
    trials = filter_trials(scored, POLICIES[policy_name])
    result = an.analyze(trials, resamples=resamples)
    chash, seed = _provenance(head)
    for name, recs in result.items():
        write_jsonl(out_dir / f"{name}.jsonl", header(name, chash, seed, policy=policy_name), recs)
    write_text(out_dir / "tables.txt", render_analysis(result))
    return result


def _gee_rows(result: Mapping) -> list[dict]:
    rows = []
    for g in result["gee"]:
        if g["status"] in ("ok", "not_converged", "separated"):
            for t in g["terms"]:
                rows.append({"scope": g["scope"], **t, "alpha": g["alpha"], "status": g["status"]})
        else:
            rows.append({"scope": g["scope"], "term": g["status"]})
    return rows


def render_analysis(result: Mapping) -> str:
    return "\n\n".join(analysis_sections(result).values())


def analysis_sections(result: Mapping) -> dict[str, str]:
    comp_cols = [("comparison", "comparison"), ("delta", "delta"), ("h", "h"), ("p", "p"),
                 ("q", "q"), ("ci low", "ci_low"), ("ci high", "ci_high"),
                 ("degenerate", "degenerate")]
    parts = {"comparisons": tables.records_table(
        result["comparisons"], comp_cols, "Pairwise comparisons (BH-adjusted across the family)")}
    corr = result["correlation"][0]
    if corr["pairs"]:
        vals = {}
        for p in corr["pairs"]:
            vals[(p["model_a"], p["model_b"])] = vals[(p["model_b"], p["model_a"])] = p["r"]
        for m in corr["models"]:
            vals[(m, m)] = 1.0
        parts["correlation"] = tables.matrix(
            corr["models"], vals, "Cross-model correlation of per-task E-Prime effects")
    else:
        parts["correlation"] = f"Cross-model correlation\n({corr['note']})"
    parts["drift"] = (tables.records_table(result["drift"], [
        ("model", "model_id"), ("condition", "condition"), ("n", "n"), ("rho", "rho"), ("p", "p"),
    ], "Drift check (Spearman, correctness vs run order)"))
    pred = result["prediction"][0]
    parts["prediction"] = (tables.records_table(pred["outcomes"], [
        ("task", "task_type"), ("predicted", "predicted"), ("delta", "delta"), ("hit", "hit"),
    ], f"Prediction check: {pred['hits']}/{pred['total']} hits, "
       f"binomial p = {tables.num(pred['binomial_p'])}"))
    parts["gee"] = (tables.records_table(_gee_rows(result), [
        ("scope", "scope"), ("term", "term"), ("coef", "coef"), ("robust se", "robust_se"),
        ("z", "z"), ("p", "p"), ("alpha", "alpha"), ("status", "status"),
    ], "GEE logistic regression (exchangeable, item clusters)"))
    return parts


# qualitative coding

def qualcode_store(store_path: Path, bank_path: Path, task: str, out_dir: Path,
                   patterns: Optional[PatternSet] = None) -> dict:
    if not store_path.is_file():
        raise FileNotFoundError(f"missing input: {store_path}")
    task_type = TaskType(task)
    patterns = patterns or default_patterns()
    store = RecordStore(store_path)
    items = {i.id: i for i in load_bank(bank_path) if i.task_type is task_type}
    chash, seed = _provenance(store.header())
    coded = []
    grouped: dict[str, list] = defaultdict(list)
    for tid, ts in sorted(dedup(store.load()).items()):
        rec = ts.first
        if rec.item_id not in items:
            continue
        m = code_response(rec.response_text or "", patterns)
        coded.append({"trial_id": tid, "condition": rec.condition.value, **m.to_dict()})
        grouped[rec.condition.value].append(m)
    order = [c.value for c in ALL_CONDITIONS if c.value in grouped]
    summary = aggregate_qual({c: grouped[c] for c in order})
    summary_recs = [{"condition": c, **summary[c]} for c in order]
    head = {"task_type": task_type.value, "patterns_version": patterns.version}
    write_jsonl(out_dir / "qual_responses.jsonl", header("qual_responses", chash, seed, **head), coded)
    write_jsonl(out_dir / "qual_summary.jsonl", header("qual_summary", chash, seed, **head), summary_recs)
    write_text(out_dir / "tables.txt", render_qual(summary_recs, task_type.value, patterns.version))
    return summary


def render_qual(summary_recs: list[dict], task: str, version: str) -> str:
    return tables.records_table(summary_recs, [
        ("condition", "condition"), ("n", "n"), ("words", "word_count"),
        ("frameworks", "frameworks_invoked"), ("mechanisms", "mechanism_articulations"),
        ("hedges/100w", "hedges_per_100_words"), ("dialectical %", "dialectical_pct"),
        ("counterargs", "counterarguments"), ("structure", "structural_markers"),
    ], f"Qualitative coding, task={task}, patterns={version}", digits=1)


# report

def _read_optional(path: Path) -> Optional[tuple[dict, list[dict]]]:
    return read_jsonl(path) if path.is_file() else None


def build_report(scored_dir: Path, analysis_dir: Path, out_dir: Path,
                 qual_dir: Optional[Path] = None) -> Path:
    required = [scored_dir / "scored.jsonl"] + [
        analysis_dir / f"{n}.jsonl" for n in ("comparisons", "correlation", "drift", "prediction", "gee")
    ]
    missing = [str(p) for p in required if not p.is_file()]
    if missing:
        raise FileNotFoundError("missing inputs: " + ", ".join(missing))
    head, _ = read_jsonl(scored_dir / "scored.jsonl")
    result = {n: read_jsonl(analysis_dir / f"{n}.jsonl")[1]
              for n in ("comparisons", "correlation", "drift", "prediction", "gee")}

    sec: list[str] = [
        "# Constraint experiment report",
        "",
        f"- config hash: {head.get('config_hash')}",
        f"- global seed: {head.get('global_seed')}",
        f"- schema version: {head.get('schema_version')}",
        f"- primary policy: {head.get('policy')}",
    ]

    def block(title: str, body: str) -> None:
        sec.extend(["", f"## {title}", "", "```", body, "```"])

    for name in POLICIES:
        _, recs = read_jsonl(scored_dir / f"accuracy_{name}.jsonl")
        block(f"Accuracy, tier {name}", tables.accuracy_grid(recs, "task_type"))
    _, recs = read_jsonl(scored_dir / "accuracy_by_model.jsonl")
    block("Accuracy by model", tables.accuracy_grid(recs, "model"))
    _, recs = read_jsonl(scored_dir / "wordcount.jsonl")
    block("Mean word count", tables.mean_grid(recs, "mean_words"))

    comps = result["comparisons"]
    sig = [c for c in comps if c["significant"]]
    comp_cols = [("comparison", "comparison"), ("delta", "delta"), ("h", "h"),
                 ("p", "p"), ("q", "q"), ("ci low", "ci_low"), ("ci high", "ci_high")]
    block(f"Significant comparisons (q < {an.Q_THRESHOLD}): {len(sig)} of "
          f"{sum(c['p'] is not None for c in comps)} tested",
          tables.records_table(sig, comp_cols) if sig else "(none)")
    ranked = sorted((c for c in comps if c["h"] is not None),
                    key=lambda c: (-abs(c["h"]), c["comparison"]))
    block("Effect sizes (Cohen's h, largest first)", tables.records_table(ranked, comp_cols))
    near = [c for c in comps if c["near_threshold"]]
    if near:
        block("Near-threshold results (|p - 0.05| < 0.01; convention-sensitive)",
              tables.records_table(near, comp_cols))

    _, deltas = read_jsonl(scored_dir / "item_deltas.jsonl")
    hist_rows = []
    for d in deltas:
        h = d["histogram"]
        hist_rows.append([d["condition"]] + [str(c) for c in h["counts"]])
    edges = deltas[0]["histogram"]["edges"] if deltas else []
    bins = [f"[{a:+.2f},{b:+.2f})" for a, b in zip(edges[:-1], edges[1:])]
    block("Per-item delta histogram vs control", tables.render(["condition"] + bins, hist_rows))

    _, retry = read_jsonl(scored_dir / "retry.jsonl")
    block("E-Prime retries", tables.records_table(retry, [
        ("model", "model_id"), ("n", "n"), ("retried", "retried"), ("rate", "rate"),
        ("first-pass acc", "first_pass_accuracy"), ("retried acc", "retried_accuracy"),
    ]) if retry else "(empty: no E-Prime trials in this store)")

    block("Drift check", tables.records_table(result["drift"], [
        ("model", "model_id"), ("condition", "condition"), ("n", "n"), ("rho", "rho"), ("p", "p"),
    ]))
    rendered = analysis_sections(result)
    block("Cross-model correlation", rendered["correlation"])
    block("Prediction check", rendered["prediction"])
    block("GEE logistic regression", rendered["gee"])

    qual = _read_optional(qual_dir / "qual_summary.jsonl") if qual_dir else None
    if qual:
        qh, qrecs = qual
        block("Qualitative coding", render_qual(qrecs, qh.get("task_type", "?"),
                                                qh.get("patterns_version", "?")))
    else:
        block("Qualitative coding", "(not run)")

    path = out_dir / "report.md"
    write_text(path, "\n".join(sec))
    return path


# pipeline

@dataclass
class PipelineResult:
    stages_run: list[str]
    stages_skipped: list[str]
    out_dir: Path


def run_pipeline(
    cfg: RunConfig,
    mock_script: Optional[Path] = None,
    transport: Optional[TransportPolicy] = None,
    resamples: int = an.BOOTSTRAP_RESAMPLES,
    on_stage: Optional[Callable[[str], None]] = None,
) -> PipelineResult:
    """plan, run, score, analyze, qualcode, report; resumes after the last finished stage."""
    if mock_script is not None:
        cfg = replace(cfg, config_hash=config_hash({"config": cfg.config_hash,
                                                    "mock": Path(mock_script).name}))
    out = cfg.output_dir
    marks = out / ".stages"
    try:
        bank = load_bank(cfg.bank)
    except (OSError, ValueError) as exc:
        raise StageError("plan", f"cannot load bank {cfg.bank}: {exc}") from exc

    def done(stage: str) -> bool:
        m = marks / stage
        return m.is_file() and m.read_text(encoding="utf-8").strip() == cfg.config_hash

    actions: dict[str, Callable[[], object]] = {
        "plan": lambda: write_plan(cfg, bank, out / PLAN_FILE),
        "run": lambda: run_trials(cfg, out / STORE_FILE, bank, mock_script, policy=transport),
        "score": lambda: score_store(out / STORE_FILE, cfg.bank, cfg.policy, out / "scored"),
        "analyze": lambda: analyze_scored(out / "scored", out / "analysis", resamples=resamples),
        "qualcode": lambda: qualcode_store(out / STORE_FILE, cfg.bank, TaskType.ETHICAL.value,
                                           out / "qual"),
        "report": lambda: build_report(out / "scored", out / "analysis", out / "report", out / "qual"),
    }
    result = PipelineResult([], [], out)
    invalidated = False
    for stage in STAGES:
        if not invalidated and done(stage):
            result.stages_skipped.append(stage)
            continue
        invalidated = True  # later stages depend on this one
        if on_stage:
            on_stage(stage)
        try:
            value = actions[stage]()
        except Exception as exc:
            raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc
        if stage == "run" and value.api_errors:
            raise StageError("run", f"{value.api_errors} trials ended in api_error; rerun to retry them")
        write_text(marks / stage, cfg.config_hash)
        result.stages_run.append(stage)
    return result
