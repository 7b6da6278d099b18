import pytest

from constraint_eval.corpus import (
    BankError,
    TaskType,
    bank_summary,
    load_bank,
    parse_bank,
    serialize_bank,
)


def _doc(items):
    return {"schema_version": 1, "items": items}


def _mc(id_="m-1", **kw):
    item = {"id": id_, "task_type": "math", "stem": "2 + 2?", "answer_kind": "multiple_choice",
            "ground_truth": "B", "options": {"A": "3", "B": "4", "C": "5", "D": "6"}}
    item.update(kw)
    return item


def test_sample_bank(bank):
    assert len(bank) == 14
    summary = bank_summary(bank)
    assert all(summary[t.value] == 2 for t in TaskType)
    assert summary["total"] == 14


def test_empty_summary():
    summary = bank_summary([])
    assert summary["total"] == 0 and set(summary.values()) == {0}


def test_round_trip(tmp_path, bank):
    path = tmp_path / "bank.json"
    path.write_text(serialize_bank(bank), encoding="utf-8")
    assert load_bank(path) == bank


def test_duplicate_id_named():
    with pytest.raises(BankError, match="syll-001"):
        parse_bank(_doc([_mc("syll-001"), _mc("syll-001")]))


def test_missing_options_rejected():
    with pytest.raises(BankError, match="options"):
        parse_bank(_doc([_mc(options=None)]))


@pytest.mark.parametrize("bad", [
    {"task_type": "poetry"},
    {"ground_truth": "E"},
    {"answer_kind": "valid_invalid"},
    {"stem": ""},
    {"id": "a:b"},
    {"extra": 1},
])
def test_invalid_items_reject_whole_bank(bad):
    with pytest.raises(BankError) as err:
        parse_bank(_doc([_mc("ok-1"), _mc("bad-1", **bad)]))
    assert err.value.problems


def test_syllogism_truth_values():
    item = {"id": "s", "task_type": "syllogisms", "stem": "P", "answer_kind": "valid_invalid",
            "ground_truth": "VALID", "options": None}
    assert parse_bank(_doc([item]))[0].ground_truth == "VALID"
    with pytest.raises(BankError):
        parse_bank(_doc([dict(item, ground_truth="A")]))


def test_schema_version_required():
    with pytest.raises(BankError):
        parse_bank({"items": []})
    with pytest.raises(BankError):
        parse_bank([])


def test_malformed_file(tmp_path):
    path = tmp_path / "bank.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(BankError, match="malformed"):
        load_bank(path)


def test_user_prompt_lists_options(bank):
    mc = next(i for i in bank if i.options)
    prompt = mc.user_prompt()
    for letter in "ABCD":
        assert f"{letter}) " in prompt
    syl = next(i for i in bank if i.task_type is TaskType.SYLLOGISMS)
    assert "VALID or INVALID" in syl.user_prompt()
