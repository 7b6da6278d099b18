"""Command-line entry point.

Exit codes: 0 success, 1 usage error (bad flags, unreadable or invalid
input), 2 stage failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from constraint_eval import pipeline
from constraint_eval.artifacts import dumps
from constraint_eval.conditions import dump_conditions, get_condition
from constraint_eval.compliance import check
from constraint_eval.config import ConfigError, config_hash, load_config
from constraint_eval.corpus import BankError, bank_summary, load_bank
from constraint_eval.extraction import extract
from constraint_eval.qualcode import PatternSet
from constraint_eval.scoring import POLICIES

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_input(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _emit(record: dict) -> None:
    sys.stdout.write(dumps(record) + "\n")


def _config(args) -> "pipeline.RunConfig":
    cfg = load_config(args.config, check_paths=not getattr(args, "bank", None))
    if getattr(args, "bank", None):
        bank = Path(args.bank)
        if not bank.is_file():
            raise UsageError(f"bank file not found: {bank}")
        cfg = replace(cfg, bank=bank,
                      config_hash=config_hash({"config": cfg.config_hash, "bank": bank.name}))
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=Path(args.out))
    return cfg


# subcommands

def cmd_plan(args) -> int:
    cfg = _config(args)
    out = Path(args.out_file) if args.out_file else cfg.output_dir / pipeline.PLAN_FILE
    n = pipeline.write_plan(cfg, load_bank(cfg.bank), out)
    print(f"planned {n} trials -> {out}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    mock = Path(args.mock) if args.mock else None
    if mock is not None:
        if not mock.is_file():
            raise UsageError(f"mock script not found: {mock}")
        cfg = replace(cfg, config_hash=config_hash({"config": cfg.config_hash, "mock": mock.name}))
    store = Path(args.store) if args.store else cfg.output_dir / pipeline.STORE_FILE
    summary = pipeline.run_trials(cfg, store, mock_script=mock, max_in_flight=args.max_in_flight)
    print(f"run: {summary.planned} planned, {summary.skipped} already complete, "
          f"{summary.executed} executed, {summary.api_errors} api errors -> {store}", file=sys.stderr)
    return EXIT_FAILURE if summary.api_errors else EXIT_OK


def cmd_check(args) -> int:
    spec = get_condition(args.condition)
    report = check(_read_input(args.file), spec)
    for v in sorted((*report.violations, *report.exempted), key=lambda v: v.start):
        _emit({"kind": "violation", "lexeme": v.lexeme, "start": v.start, "end": v.end,
               "context": v.context, "exempted": v.exempted})
    summary = {k: v for k, v in report.to_dict().items() if k not in ("violations", "exempted")}
    _emit({"kind": "summary", "violations": len(report.violations), **{
        k: v for k, v in summary.items()}})
    return EXIT_OK


def cmd_extract(args) -> int:
    result = extract(args.kind, _read_input(args.file))
    _emit(result.to_dict())
    return EXIT_OK


def cmd_score(args) -> int:
    scored = pipeline.score_store(Path(args.store), Path(args.bank), args.policy, Path(args.out))
    print(f"scored {len(scored)} records -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    result = pipeline.analyze_scored(Path(args.scored), Path(args.out), resamples=args.resamples)
    print(f"analyzed {len(result['comparisons'])} comparisons -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_qualcode(args) -> int:
    patterns = PatternSet.from_file(args.patterns) if args.patterns else None
    summary = pipeline.qualcode_store(Path(args.store), Path(args.bank), args.task,
                                      Path(args.out), patterns)
    print(f"coded {sum(r['n'] for r in summary.values())} responses -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    scored = Path(args.scored)
    analysis = Path(args.analysis) if args.analysis else scored.parent / "analysis"
    qual = Path(args.qual) if args.qual else scored.parent / "qual"
    path = pipeline.build_report(scored, analysis, Path(args.out), qual)
    print(f"report -> {path}", file=sys.stderr)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    mock = Path(args.mock) if args.mock else None
    if mock is not None and not mock.is_file():
        raise UsageError(f"mock script not found: {mock}")
    result = pipeline.run_pipeline(
        cfg, mock_script=mock,
        on_stage=lambda s: print(f"stage: {s}", file=sys.stderr),
    )
    if result.stages_skipped:
        print(f"resumed; already complete: {', '.join(result.stages_skipped)}", file=sys.stderr)
    print(f"pipeline complete -> {result.out_dir}", file=sys.stderr)
    return EXIT_OK


def cmd_corpus_validate(args) -> int:
    items = load_bank(args.path)
    print(f"{args.path}: ok, {len(items)} items")
    return EXIT_OK


def cmd_corpus_summary(args) -> int:
    _emit(bank_summary(load_bank(args.path)))
    return EXIT_OK


def cmd_conditions_dump(args) -> int:
    for rec in dump_conditions():
        _emit(rec)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="constraint-eval", description="Vocabulary-constraint reasoning experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("plan", help="write the trial plan")
    s.add_argument("--config", required=True)
    s.add_argument("--bank")
    s.add_argument("--out-file")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("run", help="execute trials into the record store (resumable)")
    s.add_argument("--config", required=True)
    s.add_argument("--bank")
    s.add_argument("--mock", help="mock script replacing every configured backend")
    s.add_argument("--store", help="record store path (default: <output_dir>/trials.jsonl)")
    s.add_argument("--max-in-flight", type=int)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("check", help="lint text for banned forms")
    s.add_argument("--condition", required=True)
    s.add_argument("--file")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("extract", help="extract an answer from a response")
    s.add_argument("--kind", required=True, choices=["valid_invalid", "mc"])
    s.add_argument("--file")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("score", help="score a record store")
    s.add_argument("--store", required=True)
    s.add_argument("--bank", required=True)
    s.add_argument("--policy", default="full", choices=sorted(POLICIES))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("analyze", help="run the statistical analysis on scored output")
    s.add_argument("--scored", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--resamples", type=int, default=10_000)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("qualcode", help="qualitative coding of responses")
    s.add_argument("--store", required=True)
    s.add_argument("--bank", required=True)
    s.add_argument("--task", default="ethical")
    s.add_argument("--patterns")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_qualcode)

    s = sub.add_parser("report", help="render the combined report")
    s.add_argument("--scored", required=True)
    s.add_argument("--analysis")
    s.add_argument("--qual")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("pipeline", help="plan, run, score, analyze, qualcode and report")
    s.add_argument("--config", required=True)
    s.add_argument("--bank")
    s.add_argument("--mock")
    s.add_argument("--out")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("corpus", help="task bank utilities")
    csub = s.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    c = csub.add_parser("validate")
    c.add_argument("path")
    c.set_defaults(func=cmd_corpus_validate)
    c = csub.add_parser("summary")
    c.add_argument("path")
    c.set_defaults(func=cmd_corpus_summary)

    s = sub.add_parser("conditions", help="condition utilities")
    csub = s.add_subparsers(dest="conditions_command", required=True, parser_class=_Parser)
    c = csub.add_parser("dump")
    c.set_defaults(func=cmd_conditions_dump)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, BankError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except pipeline.StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
