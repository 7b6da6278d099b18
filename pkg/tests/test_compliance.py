import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import data_file
from constraint_eval.compliance import (
    ComplianceTier,
    check,
    compliance_tier,
    sentence_spans,
    tokenize,
)
from constraint_eval.conditions import ALL_CONDITIONS, NEUTRAL_FORMS, get_condition

ALL_BANNED = set().union(*(get_condition(c).banned_lexemes for c in ALL_CONDITIONS))


def test_spec_examples():
    assert [v.lexeme for v in check("The cat is black.", "e_prime").violations] == ["is"]
    assert check("We choose speed rather than accuracy.", "neutral_ban").fully_compliant
    assert [v.lexeme for v in check("The proof seems rather weak.", "neutral_ban").violations] == ["rather"]
    assert len(check("They have had results.", "no_have").violations) == 2
    assert check("It is, was and will be very much so.", "control").fully_compliant


def test_tokenizer_keeps_apostrophes_and_splits_hyphens():
    assert [t.text for t in tokenize("Isn't it well-known? It’s fine")] == [
        "isn't", "it", "well", "known", "it's", "fine"]


def test_possessive_is_not_a_copula():
    assert check("The model's answer holds.", "e_prime").fully_compliant
    assert not check("That's the answer.", "e_prime").fully_compliant


def test_case_insensitive():
    assert [v.lexeme for v in check("WAS it Being done?", "e_prime").violations] == ["was", "being"]


@pytest.mark.parametrize("cid", ["e_prime", "no_have", "neutral_ban"])
def test_every_banned_form_flagged_in_isolation(cid):
    spec = get_condition(cid)
    for form in spec.banned_lexemes:
        for text in (form, f"{form}.", f"Then {form.upper()} again", f"({form})"):
            r = check(text, spec)
            assert [v.lexeme for v in r.violations] == [form], text


def test_sentence_spans():
    text = "One is here. Two!\nThree? four"
    assert len(sentence_spans(text)) == 4
    assert sentence_spans("") == []
    assert len(sentence_spans("The value 3.5 holds.")) == 1


def test_compliance_rate_and_tiers():
    clean = "The claim holds."
    r = check(" ".join([clean] * 19 + ["This is odd."]), "e_prime")
    assert r.compliance_rate == pytest.approx(0.95)
    assert compliance_tier(r) is ComplianceTier.ABOVE_90
    r = check("A is B. C was D. E holds. F were G. H holds.", "e_prime")
    assert r.compliance_rate == pytest.approx(0.4)
    assert compliance_tier(r) is ComplianceTier.BELOW_90
    r = check("", "e_prime")
    assert r.fully_compliant and r.compliance_rate == 1.0
    assert compliance_tier(r) is ComplianceTier.FULL


def test_context_window():
    text = "x" * 100 + " is " + "y" * 100
    v = check(text, "e_prime").violations[0]
    assert v.start == 101 and v.end == 103
    assert v.context == text[61:143]


def test_bundled_bigram_corpus_agrees_with_labels():
    corpus = data_file("compliance_corpus.json")
    assert len(corpus["cases"]) == 30
    spec = get_condition(corpus["condition"])
    for case in corpus["cases"]:
        r = check(case["text"], spec)
        assert [v.lexeme for v in r.violations] == case["flagged"], case["id"]
        assert [v.lexeme for v in r.exempted] == case["exempted"], case["id"]


@pytest.mark.parametrize("text", ["this", "hasten", "justify", "island", "beings", "rathe",
                                  "verylong", "haven", "isis", "justice", "basically's"])
def test_word_boundary_examples(text):
    for cid in ALL_CONDITIONS:
        assert check(text, cid).fully_compliant


letters = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=4)


@given(st.lists(st.tuples(letters, st.sampled_from(sorted(ALL_BANNED)), letters), min_size=1, max_size=8))
def test_banned_forms_inside_longer_words_never_flagged(parts):
    words = []
    for pre, form, post in parts:
        word = pre + form.replace("'", "") + post
        assume(word not in ALL_BANNED)
        words.append(word)
    text = " ".join(words)
    for cid in ALL_CONDITIONS:
        assert check(text, cid).fully_compliant


vocab = st.sampled_from(sorted(NEUTRAL_FORMS) + ["than", "but", "as", "the", "claim", "is", "has"])
seps = st.sampled_from([" ", " ", ", ", ". ", "\n", "; "])


@st.composite
def sentences(draw):
    words = draw(st.lists(vocab, min_size=1, max_size=15))
    out = words[0]
    for w in words[1:]:
        out += draw(seps) + w
    return out


@given(sentences(), sentences(), st.sampled_from(["e_prime", "no_have", "neutral_ban"]))
def test_appending_never_reduces_violations(a, b, cid):
    # appended text starts on a fresh line so no token or bigram straddles the join
    assert len(check(a + "\n" + b, cid).violations) >= len(check(a, cid).violations)


@given(sentences())
def test_replacing_exempted_words_keeps_violation_count(text):
    r = check(text, "neutral_ban")
    replaced = text
    for v in sorted(r.exempted, key=lambda v: -v.start):
        replaced = replaced[:v.start] + "instead" + replaced[v.end:]
    r2 = check(replaced, "neutral_ban")
    assert len(r2.violations) == len(r.violations)
    assert not r2.exempted


@given(sentences())
def test_check_is_pure(text):
    assert check(text, "neutral_ban") == check(text, "neutral_ban")
    r = check(text, "neutral_ban")
    assert r.fully_compliant == (not r.violations)
    if r.fully_compliant:
        assert r.compliance_rate == 1.0
