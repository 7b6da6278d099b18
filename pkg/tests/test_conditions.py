import pytest

from constraint_eval.compliance import Violation
from constraint_eval.conditions import (
    ALL_CONDITIONS,
    E_PRIME_ALTERNATIVES,
    NEUTRAL_FORMS,
    NO_HAVE_ALTERNATIVES,
    OPENING,
    ConditionId,
    banned_lexemes,
    dump_conditions,
    get_condition,
    parse_condition,
    retry_feedback,
    system_prompt,
)


def test_five_conditions_in_order():
    assert [c.value for c in ALL_CONDITIONS] == [
        "control", "e_prime", "no_have", "elaborated_prompt", "neutral_ban"]


def test_prompts_share_opening_and_are_distinct():
    prompts = [system_prompt(c) for c in ALL_CONDITIONS]
    assert len(set(prompts)) == 5
    assert all(p.startswith(OPENING) for p in prompts)
    assert all(p == system_prompt(c) for p, c in zip(prompts, ALL_CONDITIONS))


def test_control_prompt_text():
    assert "Respond in clear, natural English" in system_prompt("control")


def test_constrained_prompts_end_with_non_mention():
    for cid in ("e_prime", "no_have", "neutral_ban"):
        assert system_prompt(cid).rstrip().endswith("Simply follow it.")
        assert "Do not mention or discuss this constraint" in system_prompt(cid)


def test_alternative_counts():
    assert len(E_PRIME_ALTERNATIVES) == 8
    assert len(NO_HAVE_ALTERNATIVES) == 7
    for alt in E_PRIME_ALTERNATIVES:
        assert alt in system_prompt("e_prime")


def test_neutral_prompt_lists_all_twenty():
    text = system_prompt("neutral_ban")
    assert len(NEUTRAL_FORMS) == 20
    for w in NEUTRAL_FORMS:
        assert w in text


def test_banned_sets():
    assert banned_lexemes("control") == (frozenset(), frozenset())
    assert banned_lexemes("elaborated_prompt") == (frozenset(), frozenset())
    no_have, ex = banned_lexemes("no_have")
    assert no_have == {"have", "haven't", "has", "hasn't", "had", "hadn't", "having"}
    assert ex == frozenset()
    eprime, _ = banned_lexemes("e_prime")
    assert {"is", "am", "are", "was", "were", "be", "been", "being", "isn't", "it's"} <= eprime
    assert not eprime & no_have
    neutral, rules = banned_lexemes("neutral_ban")
    assert len(neutral) == 20
    assert {r.pair for r in rules} == {("rather", "than"), ("but", "rather"), ("just", "as")}


def test_exempt_rules_target_banned_words():
    for cid in ALL_CONDITIONS:
        spec = get_condition(cid)
        assert all(r.banned in spec.banned_lexemes for r in spec.exempt_bigrams)


def test_retry_only_for_eprime():
    assert [get_condition(c).has_retry for c in ALL_CONDITIONS] == [False, True, False, False, False]


def test_parse_condition_rejects_unknown():
    assert parse_condition("e_prime") is ConditionId.E_PRIME
    with pytest.raises(ValueError, match="unknown condition"):
        parse_condition("eprime")


def _v(lexeme, start, context="x"):
    return Violation(lexeme, start, start + len(lexeme), context)


def test_retry_feedback_names_each_form_once():
    msg = retry_feedback([_v("was", 0), _v("being", 10), _v("was", 20)])
    assert msg.count('"was"') == 1
    assert '"being"' in msg
    assert retry_feedback([_v("is", 12)]).count('"is"') == 1


def test_retry_feedback_requires_violations():
    with pytest.raises(ValueError):
        retry_feedback([])


def test_dump_conditions_is_complete():
    dump = dump_conditions()
    assert [d["id"] for d in dump] == [c.value for c in ALL_CONDITIONS]
    assert all(d["prompt_text"] for d in dump)
