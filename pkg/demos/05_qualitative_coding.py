"""
Qualitative coding
==================

Responses are coded on six dimensions with a versioned regex lexicon:
ethical frameworks named, causal mechanisms, hedges per 100 words,
dialectical engagement with rejected options, counterarguments and
structural markers.
"""

# %%
from constraint_eval.qualcode import aggregate_qual, code_response, default_patterns

patterns = default_patterns()
print("pattern set:", patterns.version)

control = (
    "**Analysis**\n"
    "1. A utilitarian view weighs net harm across everyone affected.\n"
    "2. A Kantian view asks whether the rule could hold universally.\n"
    "Option A fails because it overrides patient autonomy. However, critics "
    "might say delay causes harm.\n\n## ANSWER\nC"
)
constrained = (
    "Weighing outcomes favors acting now, since delay leads to harm. "
    "Respecting patient autonomy points the same way.\n\n## ANSWER\nC"
)
for name, text in (("control", control), ("no_have", constrained)):
    print(name, code_response(text, patterns).to_dict())

# %%
summary = aggregate_qual({
    "control": [code_response(control, patterns)],
    "no_have": [code_response(constrained, patterns)],
})
for group, row in summary.items():
    print(group, {k: round(v, 2) for k, v in row.items()})
