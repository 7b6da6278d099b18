"""Reading and writing line-delimited artifact files.

Every artifact starts with a header record carrying the schema version, the
config hash and the global seed.  Output is written with sorted keys and no
timestamps so that identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Optional

ARTIFACT_SCHEMA_VERSION = 1
HEADER_KIND = "header"


def header(artifact: str, config_hash: Optional[str], global_seed: Optional[int], **extra) -> dict:
    return {
        "kind": HEADER_KIND,
        "artifact": artifact,
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "config_hash": config_hash,
        "global_seed": global_seed,
        **extra,
    }


def dumps(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, allow_nan=False)


def write_jsonl(path: Path, head: Mapping, records: Iterable[Mapping]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [dumps(head)] + [dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_jsonl(path: Path) -> tuple[dict, list[dict]]:
    """(header, records); raises FileNotFoundError naming the path."""
    if not path.is_file():
        raise FileNotFoundError(f"missing input: {path}")
    rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not rows or rows[0].get("kind") != HEADER_KIND:
        raise ValueError(f"{path}: first line must be an artifact header")
    return rows[0], rows[1:]


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
