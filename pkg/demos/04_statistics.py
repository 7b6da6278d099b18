"""
The statistical toolkit
=======================

Fisher's exact test, Cohen's h, Benjamini-Hochberg adjustment, a seeded
bootstrap interval, the directional prediction check, Spearman drift and an
exchangeable-correlation GEE, applied to published pooled counts and to
simulated clustered data.
"""

# %%
# Classification, filler-word ban against control: 99.1% of 441 vs 91.5% of 445.
from constraint_eval.stats import (
    ContingencyTable2x2,
    bh_fdr,
    binomial_tail,
    bootstrap_ci,
    cohens_h,
    fisher_exact,
    prediction_check,
    spearman_drift,
)

k1, n1 = round(0.991 * 441), 441
k0, n0 = round(0.915 * 445), 445
table = ContingencyTable2x2.from_counts(k1, n1, k0, n0)
print("Fisher p:", fisher_exact(table))
print("Cohen's h:", round(cohens_h(k1 / n1, k0 / n0), 3))
print("bootstrap 95% CI of the difference:",
      bootstrap_ci([1] * k1 + [0] * (n1 - k1), [1] * k0 + [0] * (n0 - k0)))

# %%
# BH adjustment keeps order and never lowers a p-value.
p = [0.0001, 0.004, 0.019, 0.03, 0.2, 0.6]
print(list(zip(p, bh_fdr(p).round(4).tolist())))

# %%
# Five of seven directional predictions right is not better than chance.
print("P(X >= 5 | n = 7, p = 0.5) =", binomial_tail(5, 7, 0.5))
deltas = {"syllogisms": -0.014, "causal": 0.047, "analogical": -0.065, "classification": 0.048,
          "epistemic": 0.098, "ethical": 0.133, "math": -0.006}
pc = prediction_check(deltas)
print(f"prediction check: {pc.hits}/{pc.total}, p = {pc.p:.3f}")

# %%
# Drift: correctness against run order.
import numpy as np

rng = np.random.default_rng(0)
print("stationary:", spearman_drift(rng.integers(0, 2, 300)))
print("improving: ", spearman_drift((rng.random(300) < np.linspace(0.5, 0.9, 300)).astype(int)))

# %%
# GEE with items as clusters: the robust SE widens when answers within an
# item correlate, which naive pooled tests ignore.
from constraint_eval.gee import gee_logistic

y, cond, clus = [], [], []
for item in range(60):
    easy = rng.random() < 0.5
    for j in range(10):
        c = "treated" if j % 2 else "control"
        p_correct = (0.9 if easy else 0.5) + (0.05 if c == "treated" else 0.0)
        y.append(int(rng.random() < p_correct))
        cond.append(c)
        clus.append(item)
fit = gee_logistic(y, cond, clus)
for rec in fit.to_records():
    print(rec)
print("working correlation alpha:", round(fit.alpha, 3))
