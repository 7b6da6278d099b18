import json

import pytest

from constraint_eval.conditions import ConditionId
from constraint_eval.store import (
    STATUS_API_ERROR,
    STATUS_OK,
    RecordStore,
    StoreCorruptionError,
    TrialRecord,
    dedup,
    encode_record,
)


def rec(tid="m:control:i1:0", attempt=0, status=STATUS_OK, text="**A**", cond="control"):
    model, condition, item, idx = tid.split(":")
    return TrialRecord(
        trial_id=tid, item_id=item, model_id=model, condition=ConditionId(condition),
        trial_index=int(idx), temperature=0.0, max_tokens=2048, request_seed=1, sequence=0,
        attempt=attempt, status=status,
        response_text=text if status == STATUS_OK else None,
        finish_reason="stop" if status == STATUS_OK else None,
        started_at="t0", completed_at="t1",
    )


def test_record_invariants():
    with pytest.raises(ValueError):
        rec(attempt=1)  # retry outside e_prime
    with pytest.raises(ValueError):
        TrialRecord(**{**rec().__dict__, "status": STATUS_API_ERROR})
    assert rec("m:e_prime:i1:0", attempt=1).attempt == 1


def test_round_trip(tmp_path):
    store = RecordStore(tmp_path / "s.jsonl")
    records = [rec(), rec("m:e_prime:i1:0"), rec("m:e_prime:i1:0", attempt=1)]
    store.append(records)
    assert store.load() == records


def test_header_line_skipped(tmp_path):
    store = RecordStore(tmp_path / "s.jsonl")
    head = {"artifact": "trials", "kind": "header", "schema_version": 1}
    store.ensure_header(head)
    store.ensure_header({**head, "artifact": "other"})  # no-op once written
    store.append([rec()])
    assert store.header() == head
    assert store.load() == [rec()]


def test_torn_final_line_dropped_and_repaired(tmp_path):
    path = tmp_path / "s.jsonl"
    store = RecordStore(path)
    store.append([rec()])
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(encode_record(rec("m:control:i2:0"))[:30])
    assert store.load() == [rec()]
    store.repair_tail()
    store.append([rec("m:control:i3:0")])
    assert [r.trial_id for r in store.load()] == ["m:control:i1:0", "m:control:i3:0"]


def test_checksum_mismatch_detected(tmp_path):
    path = tmp_path / "s.jsonl"
    RecordStore(path).append([rec()])
    d = json.loads(path.read_text())
    d["response_text"] = "**B**"
    path.write_text(json.dumps(d) + "\n")
    with pytest.raises(StoreCorruptionError, match="checksum"):
        RecordStore(path).load()


def test_interior_garbage_detected(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text("garbage\n" + encode_record(rec()))
    with pytest.raises(StoreCorruptionError, match=":1:"):
        RecordStore(path).load()


def test_dedup_keeps_first_ok_set():
    first = rec(text="**A**")
    again = rec(text="**B**")
    failed = rec("m:control:i2:0", status=STATUS_API_ERROR)
    sets = dedup([failed, first, again])
    assert list(sets) == ["m:control:i1:0"]
    assert sets["m:control:i1:0"].first.response_text == "**A**"


def test_dedup_pairs_retry_with_adjacent_first_pass():
    tid = "m:e_prime:i1:0"
    a0, a1 = rec(tid, text="It is so."), rec(tid, attempt=1, text="Fine.")
    b0, b1 = rec(tid, text="It was so."), rec(tid, attempt=1, text="Other.")
    sets = dedup([a0, b0, b1])
    assert sets[tid].retry is None  # b1 belongs to the later re-run
    sets = dedup([a0, a1, b0, b1])
    assert sets[tid].retry.response_text == "Fine."
