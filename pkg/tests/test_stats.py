import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from constraint_eval.stats import (
    ContingencyTable2x2,
    bh_fdr,
    binomial_cdf_exact,
    binomial_tail,
    binomial_tail_exact,
    bootstrap_ci,
    cohens_h,
    cross_model_correlation,
    fisher_exact,
    midranks,
    pearson_r,
    prediction_check,
    spearman_drift,
)


# ---------------------------------------------------------------- oracles

def fisher_oracle(a, b, c, d):
    """Exhaustive enumeration over tables sharing the margins, exact rationals."""
    r1, r2, c1 = a + b, c + d, a + c
    n = r1 + r2
    if 0 in (r1, r2, c1, n - c1):
        return Fraction(1)
    total = math.comb(n, c1)
    probs = {
        x: Fraction(math.comb(r1, x) * math.comb(r2, c1 - x), total)
        for x in range(max(0, c1 - r2), min(r1, c1) + 1)
    }
    observed = probs[a]
    return sum(p for p in probs.values() if p <= observed)


def bh_bruteforce(p):
    m = len(p)
    order = sorted(range(m), key=lambda i: (p[i], i))
    q = [0.0] * m
    for rank, i in enumerate(order, 1):
        q[i] = min(1.0, min(p[order[j - 1]] * m / j for j in range(rank, m + 1)))
    return q


# ---------------------------------------------------------------- fisher

def test_fisher_small_examples():
    assert fisher_exact([[3, 1], [1, 3]]) == pytest.approx(0.4857142857142857, abs=1e-15)
    assert fisher_exact([[0, 5], [5, 0]]) == pytest.approx(1 / 126, abs=1e-15)
    assert fisher_exact([[5, 5], [5, 5]]) == 1.0


def test_fisher_degenerate_margin_is_one():
    assert fisher_exact([[0, 0], [3, 4]]) == 1.0
    assert fisher_exact([[0, 3], [0, 4]]) == 1.0


def test_fisher_matches_scipy_on_large_counts():
    table = [[9000, 1000], [8700, 1300]]
    assert fisher_exact(table) == pytest.approx(sps.fisher_exact(table)[1], rel=1e-9)


def test_fisher_oracle_sample():
    for a, b, c, d in [(1, 2, 3, 4), (7, 0, 2, 9), (0, 15, 15, 0), (4, 4, 4, 4)]:
        assert abs(fisher_exact([[a, b], [c, d]]) - float(fisher_oracle(a, b, c, d))) < 1e-12


def test_fisher_symmetry_under_row_and_column_swap():
    for a, b, c, d in [(3, 7, 9, 2), (0, 4, 6, 1), (12, 3, 5, 5)]:
        p = fisher_exact([[a, b], [c, d]])
        assert fisher_exact([[c, d], [a, b]]) == pytest.approx(p, abs=1e-15)
        assert fisher_exact([[b, a], [d, c]]) == pytest.approx(p, abs=1e-15)


def test_contingency_rejects_negative_counts():
    with pytest.raises(ValueError):
        ContingencyTable2x2(1, -1, 2, 3)


# ---------------------------------------------------------------- effect size

def test_cohens_h_values():
    assert cohens_h(0.5, 0.5) == 0.0
    assert cohens_h(1.0, 0.0) == pytest.approx(math.pi)
    assert cohens_h(0.2, 0.7) == pytest.approx(-cohens_h(0.7, 0.2))


def test_cohens_h_range_checked():
    with pytest.raises(ValueError):
        cohens_h(1.2, 0.5)


# ---------------------------------------------------------------- bh

def test_bh_example():
    q = bh_fdr([0.01, 0.02, 0.03, 0.04])
    assert np.allclose(q, [0.04, 0.04, 0.04, 0.04])


def test_bh_empty_and_single():
    assert bh_fdr([]).size == 0
    assert list(bh_fdr([0.3])) == [0.3]


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=20))
def test_bh_properties(p):
    q = bh_fdr(p)
    assert np.all(q >= np.asarray(p) - 1e-15)
    assert np.all(q <= 1.0)
    order = np.argsort(p, kind="mergesort")
    assert np.all(np.diff(q[order]) >= -1e-15)


def test_bh_rejects_out_of_range():
    with pytest.raises(ValueError):
        bh_fdr([0.1, 1.5])


# ---------------------------------------------------------------- bootstrap

def test_bootstrap_is_deterministic():
    a = [1] * 40 + [0] * 10
    b = [1] * 30 + [0] * 20
    assert bootstrap_ci(a, b, seed=42) == bootstrap_ci(a, b, seed=42)
    assert bootstrap_ci(a, b, seed=42) != bootstrap_ci(a, b, seed=43)


def test_bootstrap_contains_point_estimate():
    a = [1] * 40 + [0] * 10
    b = [1] * 30 + [0] * 20
    lo, hi = bootstrap_ci(a, b)
    assert lo <= 0.8 - 0.6 <= hi


def test_bootstrap_constant_groups_collapse():
    assert bootstrap_ci([1, 1, 1], [0, 0]) == (1.0, 1.0)


def test_bootstrap_rejects_bad_input():
    with pytest.raises(ValueError):
        bootstrap_ci([], [1])
    with pytest.raises(ValueError):
        bootstrap_ci([0.5], [1])


# ---------------------------------------------------------------- rank correlation

def test_midranks_ties():
    assert list(midranks([3, 1, 3, 2])) == [3.5, 1.0, 3.5, 2.0]


def test_spearman_monotone():
    assert spearman_drift([1, 2, 3, 4, 5]).rho == pytest.approx(1.0)
    assert spearman_drift([5, 4, 3, 2, 1]).rho == pytest.approx(-1.0)


def test_spearman_matches_scipy_with_ties():
    y = np.random.default_rng(3).integers(0, 2, 200)
    ours = spearman_drift(y)
    ref = sps.spearmanr(np.arange(200), y)
    assert ours.rho == pytest.approx(ref.statistic, abs=1e-12)
    assert ours.p == pytest.approx(ref.pvalue, rel=1e-9)


def test_spearman_constant_is_undefined():
    rho, p = spearman_drift([1, 1, 1, 1])
    assert math.isnan(rho) and math.isnan(p)


def test_spearman_needs_three_points():
    with pytest.raises(ValueError):
        spearman_drift([1, 0])


def test_pearson_zero_variance_is_none():
    assert pearson_r([1, 1, 1], [1, 2, 3]) is None
    assert pearson_r([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)


def test_cross_model_correlation_pairs():
    cm = cross_model_correlation({"m1": [0.1, 0.2, 0.3], "m2": [0.3, 0.2, 0.1], "m3": [0.1, 0.2, 0.3]})
    rs = {(a, b): r for a, b, r in cm.pairs}
    assert rs[("m1", "m2")] == pytest.approx(-1.0)
    assert rs[("m1", "m3")] == pytest.approx(1.0)
    assert cm.matrix().shape == (3, 3)
    assert cm.range == pytest.approx((-1.0, 1.0))


# ---------------------------------------------------------------- binomial

def test_binomial_tail_exact_value():
    assert binomial_tail_exact(5, 7, Fraction(1, 2)) == Fraction(29, 128)
    assert binomial_tail(5, 7, 0.5) == pytest.approx(29 / 128, abs=1e-15)


@pytest.mark.parametrize("k,n", [(0, 5), (3, 7), (7, 7), (4, 10)])
def test_binomial_tail_complements_cdf(k, n):
    p0 = Fraction(1, 3)
    lower = binomial_cdf_exact(k - 1, n, p0) if k > 0 else Fraction(0)
    assert binomial_tail_exact(k, n, p0) + lower == 1


def test_binomial_tail_rejects_bad_args():
    with pytest.raises(ValueError):
        binomial_tail(8, 7, 0.5)


def test_prediction_check_neutral_band():
    deltas = {"syllogisms": -0.03, "causal": 0.05, "analogical": 0.04, "classification": -0.01,
              "epistemic": 0.02, "ethical": 0.06, "math": 0.015}
    pc = prediction_check(deltas)
    assert pc.total == 7
    assert pc.hits == 7
    assert pc.p == pytest.approx(1 / 128)
