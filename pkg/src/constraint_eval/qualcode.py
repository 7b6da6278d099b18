"""Pattern-based qualitative coding of free-text responses.

Responses are coded on six dimensions (framework diversity, mechanism
articulation, hedging density, dialectical engagement, counterarguments,
structural markers) with regex lexicons loaded from a versioned pattern file.
The default file ships in ``constraint_eval/data/qual_patterns.json``.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from constraint_eval.scoring import word_count

PATTERN_SCHEMA_VERSION = 1
_STRUCTURE_KINDS = ("numbered", "bullet", "bold_header")


@dataclass(frozen=True)
class PatternSet:
    version: str
    frameworks: Mapping[str, tuple[re.Pattern, ...]]
    hedges: tuple[re.Pattern, ...]
    mechanisms: tuple[re.Pattern, ...]
    counterarguments: tuple[re.Pattern, ...]
    dialectical: tuple[re.Pattern, ...]
    structure: Mapping[str, re.Pattern]

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PatternSet":
        if doc.get("schema_version") != PATTERN_SCHEMA_VERSION:
            raise ValueError(f"unsupported pattern schema_version {doc.get('schema_version')!r}")
        if not doc.get("version"):
            raise ValueError("pattern file needs a version string")

        def compile_all(key: str) -> tuple[re.Pattern, ...]:
            pats = doc.get(key) or []
            if not pats:
                raise ValueError(f"pattern set {key!r} is empty")
            return tuple(re.compile(p, re.IGNORECASE) for p in pats)

        families = doc.get("frameworks") or {}
        if not families or not all(families.values()):
            raise ValueError("every framework family needs at least one pattern")
        structure = doc.get("structure") or {}
        if set(structure) != set(_STRUCTURE_KINDS):
            raise ValueError(f"structure patterns must be exactly {_STRUCTURE_KINDS}")
        return cls(
            version=str(doc["version"]),
            frameworks={k: tuple(re.compile(p, re.IGNORECASE) for p in v)
                        for k, v in families.items()},
            hedges=compile_all("hedges"),
            mechanisms=compile_all("mechanisms"),
            counterarguments=compile_all("counterarguments"),
            dialectical=compile_all("dialectical"),
            structure={k: re.compile(structure[k], re.MULTILINE) for k in _STRUCTURE_KINDS},
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PatternSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_patterns() -> PatternSet:
    text = resources.files("constraint_eval.data").joinpath("qual_patterns.json").read_text(
        encoding="utf-8")
    return PatternSet.from_dict(json.loads(text))


@dataclass(frozen=True)
class QualMetrics:
    word_count: int
    frameworks_invoked: int
    mechanism_articulations: int
    hedges: int
    hedges_per_100_words: float
    dialectical: bool
    counterarguments: int
    structural_markers: int

    def to_dict(self) -> dict:
        return asdict(self)


def _count(patterns: Iterable[re.Pattern], text: str) -> int:
    return sum(len(p.findall(text)) for p in patterns)


def _structural_markers(text: str, structure: Mapping[str, re.Pattern]) -> int:
    # one marker per line at most
    n = 0
    for line in text.splitlines():
        if any(structure[k].match(line) for k in _STRUCTURE_KINDS):
            n += 1
    return n


def code_response(text: str, patterns: PatternSet | None = None) -> QualMetrics:
    patterns = patterns or default_patterns()
    words = word_count(text)
    hedges = _count(patterns.hedges, text)
    return QualMetrics(
        word_count=words,
        frameworks_invoked=sum(
            any(p.search(text) for p in pats) for pats in patterns.frameworks.values()
        ),
        mechanism_articulations=_count(patterns.mechanisms, text),
        hedges=hedges,
        hedges_per_100_words=100.0 * hedges / words if words else 0.0,
        dialectical=any(p.search(text) for p in patterns.dialectical),
        counterarguments=_count(patterns.counterarguments, text),
        structural_markers=_structural_markers(text, patterns.structure),
    )


_MEAN_FIELDS = (
    "word_count",
    "frameworks_invoked",
    "mechanism_articulations",
    "hedges_per_100_words",
    "counterarguments",
    "structural_markers",
)


def aggregate_qual(grouped: Mapping[str, Sequence[QualMetrics]]) -> dict[str, dict]:
    """Per-group means of every dimension, dialectical as a percentage."""
    out = {}
    for group, metrics in grouped.items():
        n = len(metrics)
        if n == 0:
            out[group] = {"n": 0}
            continue
        row = {"n": n}
        for f in _MEAN_FIELDS:
            row[f] = sum(getattr(m, f) for m in metrics) / n
        row["dialectical_pct"] = 100.0 * sum(m.dialectical for m in metrics) / n
        out[group] = row
    return out
