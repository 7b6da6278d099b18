import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constraint_eval.qualcode import PatternSet, aggregate_qual, code_response, default_patterns

from conftest import data_file

DIALECTICAL = [
    ("Option A fails to respect the patient's wishes.", True),
    ("Option B falls short on fairness.", True),
    ("The main weakness of option C lies in its cost.", True),
    ("Option (D) ignores the long-term effects.", True),
    ("This approach overlooks the bystanders.", True),
    ("The position neglects future generations.", True),
    ("Option A's key flaw: it sacrifices trust.", True),
    ("A drawback of this approach: it delays treatment.", True),
    ("The alternative breaks down under scrutiny.", True),
    ("Choice B's central problem concerns consent.", True),
    ("Option A protects the patient.", False),
    ("I choose option B.", False),
    ("The best answer: C.", False),
    ("Every option carries some cost.", False),
    ("This approach respects autonomy.", False),
    ("The weakness in the argument appears early.", False),
    ("Failing grades follow poor study habits.", False),
    ("Option D works well for everyone involved.", False),
    ("The problem asks which action to take.", False),
    ("Position papers often ignore detail.", False),
]


@pytest.mark.parametrize("text,label", DIALECTICAL)
def test_dialectical_hand_labels(text, label):
    assert code_response(text).dialectical is label


def test_dialectical_fixture_balance():
    assert len(DIALECTICAL) == 20
    assert sum(label for _, label in DIALECTICAL) == 10


def test_framework_count_monotone():
    base = "We weigh net benefit for all."
    counts = [code_response(base).frameworks_invoked]
    for extra in (" A Kantian view differs.", " Virtue matters too.",
                  " Patient rights apply.", " The veil of ignorance helps."):
        base += extra
        counts.append(code_response(base).frameworks_invoked)
    assert counts == [1, 2, 3, 4, 5]
    # a family counts once however often it appears
    assert code_response("utilitarian utilitarianism greatest good").frameworks_invoked == 1


@settings(max_examples=30)
@given(st.integers(1, 6))
def test_hedge_rate_scale_invariant(k):
    text = "Perhaps the plan might succeed in time. "
    one = code_response(text)
    many = code_response(text * k)
    assert many.hedges == k * one.hedges
    assert many.hedges_per_100_words == pytest.approx(one.hedges_per_100_words)


def test_hedges_word_boundary():
    assert code_response("Mayor Mighty seemed couldron").hedges == 0
    assert code_response("It may seem so, and it could.").hedges == 3


def test_structural_markers_one_per_line():
    text = "1. First point\n2) Second\n- bullet\n* star\n**Header** text\nplain line\n  3. indented"
    assert code_response(text).structural_markers == 6
    assert code_response("no markers 1. here").structural_markers == 0


def test_counterarguments_and_mechanisms():
    m = code_response("However, critics note the plan leads to harm because it causes delay.")
    assert m.counterarguments == 2
    assert m.mechanism_articulations == 3


def test_empty_text():
    m = code_response("")
    assert m.word_count == 0 and m.hedges_per_100_words == 0.0
    assert not m.dialectical and m.structural_markers == 0


def test_aggregate():
    a = code_response("Option A fails here.")
    b = code_response("Option B works.")
    agg = aggregate_qual({"control": [a, b], "none": []})
    assert agg["control"]["n"] == 2
    assert agg["control"]["dialectical_pct"] == 50.0
    assert agg["control"]["word_count"] == pytest.approx(3.5)
    assert agg["none"] == {"n": 0}


def test_pattern_file_validation():
    doc = data_file("qual_patterns.json")
    assert PatternSet.from_dict(doc).version == default_patterns().version
    with pytest.raises(ValueError):
        PatternSet.from_dict({**doc, "schema_version": 2})
    with pytest.raises(ValueError):
        PatternSet.from_dict({**doc, "hedges": []})
    with pytest.raises(ValueError):
        PatternSet.from_dict({**doc, "structure": {"numbered": "x"}})
    with pytest.raises(ValueError):
        PatternSet.from_dict({**doc, "version": ""})


def test_custom_patterns_change_coding():
    doc = data_file("qual_patterns.json")
    custom = PatternSet.from_dict({**doc, "hedges": [r"\bmaybe\b"]})
    assert code_response("maybe it may", custom).hedges == 1
