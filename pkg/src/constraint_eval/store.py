"""Append-only JSONL store of trial records.

One record per line.  Each line carries a ``checksum`` (first 16 hex digits of
SHA-256 over the canonical JSON of the other fields) so that damaged lines are
detected on load.  A final line without a trailing newline is the remnant of
an interrupted write: it is dropped on load and cut off before the next append.
Any other damaged line aborts loading.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, Optional

from constraint_eval.conditions import ConditionId

log = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_API_ERROR = "api_error"
STATUS_EMPTY = "empty"
STATUSES = (STATUS_OK, STATUS_API_ERROR, STATUS_EMPTY)


# header lines are canonical JSON, so sorted keys put "artifact" first
HEADER_PREFIX = b'{"artifact":'


class StoreCorruptionError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrialPlan:
    trial_id: str
    item_id: str
    model_id: str
    condition: ConditionId
    trial_index: int
    temperature: float
    max_tokens: int
    request_seed: int
    sequence: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = self.condition.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialPlan":
        return cls(**{**{f.name: d[f.name] for f in fields(cls)},
                      "condition": ConditionId(d["condition"])})


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    item_id: str
    model_id: str
    condition: ConditionId
    trial_index: int
    temperature: float
    max_tokens: int
    request_seed: int
    sequence: int
    attempt: int
    status: str
    response_text: Optional[str]
    finish_reason: Optional[str]
    started_at: str
    completed_at: str
    error: Optional[str] = None

    def __post_init__(self) -> None:
        if self.attempt not in (0, 1):
            raise ValueError(f"attempt must be 0 or 1, got {self.attempt}")
        if self.attempt == 1 and self.condition is not ConditionId.E_PRIME:
            raise ValueError("only e_prime trials have a retry attempt")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status != STATUS_OK and (self.response_text or self.finish_reason):
            raise ValueError("non-ok records carry no response fields")

    @property
    def plan(self) -> TrialPlan:
        return TrialPlan(**{f.name: getattr(self, f.name) for f in fields(TrialPlan)})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = self.condition.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{**{k: v for k, v in d.items() if k in names},
                      "condition": ConditionId(d["condition"])})


def _canonical(d: dict) -> str:
    return json.dumps(d, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def checksum(d: dict) -> str:
    return hashlib.sha256(_canonical(d).encode("utf-8")).hexdigest()[:16]


def encode_record(record: TrialRecord) -> str:
    d = record.to_dict()
    d["checksum"] = checksum(d)
    return _canonical(d) + "\n"


def decode_line(line: str, lineno: int, source: str = "<store>") -> TrialRecord:
    try:
        d = json.loads(line)
        stored = d.pop("checksum")
    except (json.JSONDecodeError, KeyError, AttributeError, TypeError) as exc:
        raise StoreCorruptionError(f"{source}:{lineno}: unreadable record ({exc})") from None
    if checksum(d) != stored:
        raise StoreCorruptionError(f"{source}:{lineno}: checksum mismatch")
    try:
        return TrialRecord.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreCorruptionError(f"{source}:{lineno}: invalid record ({exc})") from None


class RecordStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def _scan(self) -> tuple[list[TrialRecord], int]:
        """Records plus the byte length of the intact prefix."""
        if not self.path.exists():
            return [], 0
        data = self.path.read_bytes()
        records = []
        intact = 0
        lines = data.split(b"\n")
        for lineno, raw in enumerate(lines, 1):
            is_last = lineno == len(lines)
            if is_last:
                if raw:
                    log.warning("%s: dropping torn final line (%d bytes)", self.path, len(raw))
                break
            if not raw.strip():
                raise StoreCorruptionError(f"{self.path}:{lineno}: blank line")
            intact += len(raw) + 1
            if raw.startswith(HEADER_PREFIX):
                continue
            records.append(decode_line(raw.decode("utf-8", errors="strict"), lineno, str(self.path)))
        return records, intact

    def header(self) -> Optional[dict]:
        """The provenance header line, if the store has one."""
        if not self.path.exists():
            return None
        with open(self.path, "rb") as fh:
            first = fh.readline()
        if first.startswith(HEADER_PREFIX) and first.endswith(b"\n"):
            return json.loads(first)
        return None

    def ensure_header(self, head: dict) -> None:
        """Write ``head`` as the first line of a new or empty store."""
        self.repair_tail()
        if self.path.exists() and self.path.stat().st_size:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "wb") as fh:
            fh.write((_canonical(head) + "\n").encode("utf-8"))

    def load(self) -> list[TrialRecord]:
        return self._scan()[0]

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self.load())

    def repair_tail(self) -> None:
        """Cut an interrupted final line so that appends start on a fresh line."""
        _, intact = self._scan()
        if self.path.exists() and self.path.stat().st_size != intact:
            with open(self.path, "r+b") as fh:
                fh.truncate(intact)

    def append(self, records: Iterable[TrialRecord], fsync: bool = False) -> None:
        payload = "".join(encode_record(r) for r in records).encode("utf-8")
        if not payload:
            return
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as fh:
                fh.write(payload)
                fh.flush()
                if fsync:
                    os.fsync(fh.fileno())


@dataclass(frozen=True)
class TrialSet:
    """The persisted outcome of one trial: first pass plus optional retry."""

    first: TrialRecord
    retry: Optional[TrialRecord] = None

    def records(self) -> list[TrialRecord]:
        return [self.first] if self.retry is None else [self.first, self.retry]


def dedup(records: Iterable[TrialRecord]) -> dict[str, TrialSet]:
    """First ok record set per trial_id, in store order.

    Keeps the first ok first-pass record of each trial and the retry record
    written directly after it (both are appended in one write); later re-runs
    of the same trial are ignored.
    """
    firsts: dict[str, TrialRecord] = {}
    retries: dict[str, TrialRecord] = {}
    prev: Optional[TrialRecord] = None
    for rec in records:
        if rec.attempt == 0:
            if rec.status == STATUS_OK and rec.trial_id not in firsts:
                firsts[rec.trial_id] = rec
        elif prev is not None and prev is firsts.get(rec.trial_id):
            retries[rec.trial_id] = rec
        prev = rec
    return {tid: TrialSet(first, retries.get(tid)) for tid, first in firsts.items()}


def read_plan(path: str | Path) -> list[TrialPlan]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            if d.get("kind") == "header":
                continue
            out.append(TrialPlan.from_dict(d))
    return out
