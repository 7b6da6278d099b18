"""Vocabulary-constraint reasoning experiments.

Condition prompting, compliance linting, answer extraction, trial execution
against model backends, compliance-stratified scoring and the statistical
analysis suite.
"""
from constraint_eval.compliance import ComplianceReport, ComplianceTier, check
from constraint_eval.conditions import ALL_CONDITIONS, ConditionId, get_condition
from constraint_eval.corpus import TaskItem, TaskType, load_bank, load_sample_bank
from constraint_eval.extraction import ExtractedAnswer, extract
from constraint_eval.gee import GeeFit, gee_logistic
from constraint_eval.stats import (
    bh_fdr,
    binomial_tail,
    bootstrap_ci,
    cohens_h,
    fisher_exact,
    spearman_drift,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CONDITIONS",
    "ComplianceReport",
    "ComplianceTier",
    "ConditionId",
    "ExtractedAnswer",
    "GeeFit",
    "TaskItem",
    "TaskType",
    "bh_fdr",
    "binomial_tail",
    "bootstrap_ci",
    "check",
    "cohens_h",
    "extract",
    "fisher_exact",
    "gee_logistic",
    "get_condition",
    "load_bank",
    "load_sample_bank",
    "spearman_drift",
]
