"""
Answer extraction
=================

Answers come out of free text through a priority cascade of rules.  Within
a rule the last match wins, so a model that reconsiders gets credit for its
final answer.  Responses with no recognizable answer stay unscoreable.
"""

# %%
from constraint_eval.extraction import extract, matching_rules

responses = [
    ("valid_invalid", "Both premises hold, so the argument works.\n\n**VALID**"),
    ("valid_invalid", "To make the conclusion valid we would need a third premise.\n\nAnswer: INVALID"),
    ("valid_invalid", "The reasoning runs out of room before a verdict"),
    ("multiple_choice", "Option B fails on cost. \\boxed{C}"),
    ("multiple_choice", "**Answer: A**\n\nOn reflection, the best answer: **D**"),
    ("multiple_choice", "A careful reading favors the second option."),
]

for kind, text in responses:
    got = extract(kind, text)
    print(f"{str(got.value):8s} via {str(got.rule):22s} (rules matching: {matching_rules(text, kind)})")

# %%
# The bundled fixture corpus covers every rule at least twice.
import json
from importlib import resources

corpus = json.loads(resources.files("constraint_eval.data").joinpath("extraction_corpus.json").read_text())
hits = sum((extract(c["kind"], c["text"]).value == c["value"]) for c in corpus["cases"])
print(f"corpus agreement: {hits}/{len(corpus['cases'])}")
