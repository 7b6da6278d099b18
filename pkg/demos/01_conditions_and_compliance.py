"""
Prompt conditions and the compliance checker
============================================

Each condition pairs a system prompt with a set of banned word forms.  The
checker tokenizes a response, flags banned forms on word boundaries and
reports the fraction of clean sentences.
"""

# %%
# The five conditions and how many forms each one bans.
from constraint_eval.conditions import ALL_CONDITIONS, get_condition, system_prompt

for cid in ALL_CONDITIONS:
    spec = get_condition(cid)
    print(f"{cid.value:18s} {len(spec.banned_lexemes):3d} banned forms")

print()
print(system_prompt("e_prime"))

# %%
# A response that slips twice under E-Prime.
from constraint_eval.compliance import check, compliance_tier

text = (
    "The first premise links every mammal to warm blood. "
    "Whales are mammals, so whales share that trait. "
    "The conclusion follows. It was never in doubt."
)
report = check(text, "e_prime")
for v in report.violations:
    print(f"{v.lexeme!r} at {v.start}: ...{v.context}...")
print("sentence compliance rate:", report.compliance_rate, "->", compliance_tier(report).value)

# %%
# The filler-word ban exempts "rather than", "but rather" and "just as" while
# still catching the same words used as intensifiers.
for text in ("We chose depth rather than speed.",
             "Not a bug but rather a feature.",
             "Just as before, the result holds.",
             "The result looks rather odd and just wrong."):
    r = check(text, "neutral_ban")
    print(f"{text:45s} flagged={[v.lexeme for v in r.violations]} "
          f"exempt={[v.lexeme for v in r.exempted]}")

# %%
# Word boundaries: banned forms inside longer words never count.
for word in ("this", "hasten", "justify", "island"):
    print(word, check(word, "e_prime").fully_compliant, check(word, "neutral_ban").fully_compliant)
