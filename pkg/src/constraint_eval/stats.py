"""Inferential statistics for pairwise condition comparisons.

Exact two-sided Fisher test, Cohen's h, Benjamini-Hochberg adjustment,
percentile bootstrap intervals, Spearman drift check, Pearson correlation
matrices, and exact binomial tails.  Every randomized procedure takes an
explicit seed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as _sps

# relative slack on the "at most as probable" comparison in the Fisher sum
FISHER_RTOL = 1e-7
_FISHER_SCALE = 10**9


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Rows are the two conditions, columns are (correct, incorrect)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        for name in "abcd":
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"cell {name} must be a nonnegative integer, got {v!r}")

    @classmethod
    def from_counts(cls, correct1: int, n1: int, correct2: int, n2: int) -> "ContingencyTable2x2":
        return cls(correct1, n1 - correct1, correct2, n2 - correct2)

    @property
    def degenerate(self) -> bool:
        """True when some row or column margin is zero."""
        a, b, c, d = self.a, self.b, self.c, self.d
        return 0 in (a + b, c + d, a + c, b + d)


def _hypergeom_weights(r1: int, r2: int, c1: int):
    """Integer weights C(r1, x) * C(r2, c1 - x) over the support, by recurrence."""
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    w = math.comb(r1, lo) * math.comb(r2, c1 - lo)
    weights = [w]
    for x in range(lo, hi):
        # exact: each weight is an integer
        w = w * (r1 - x) * (c1 - x) // ((x + 1) * (r2 - c1 + x + 1))
        weights.append(w)
    return lo, weights


def fisher_exact(table: ContingencyTable2x2 | Sequence[Sequence[int]]) -> float:
    """Two-sided Fisher exact p by the probability-mass convention.

    Sums the hypergeometric probability of every table (margins fixed) whose
    probability does not exceed the observed one, with a 1e-7 relative slack.
    Integer arithmetic throughout, so the result is the correctly rounded
    float of an exact rational.  Tables with a zero margin return 1.0.
    """
    if not isinstance(table, ContingencyTable2x2):
        (a, b), (c, d) = table
        table = ContingencyTable2x2(int(a), int(b), int(c), int(d))
    if table.degenerate:
        return 1.0
    r1 = table.a + table.b
    r2 = table.c + table.d
    c1 = table.a + table.c
    lo, weights = _hypergeom_weights(r1, r2, c1)
    observed = weights[table.a - lo]
    bound = observed * (_FISHER_SCALE + round(FISHER_RTOL * _FISHER_SCALE))
    total = sum(weights)
    tail = sum(w for w in weights if w * _FISHER_SCALE <= bound)
    return min(1.0, tail / total)


def cohens_h(p1: float, p2: float) -> float:
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"proportion out of range: {p}")
    return 2.0 * math.asin(math.sqrt(p1)) - 2.0 * math.asin(math.sqrt(p2))


def bh_fdr(pvals: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up q-values, returned in input order."""
    p = np.asarray(pvals, dtype=float)
    if p.ndim != 1:
        raise ValueError("pvals must be one-dimensional")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="mergesort")
    ranked = p[order] * m / np.arange(1, m + 1)
    # running minimum from the largest rank down
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q = np.empty(m)
    q[order] = np.minimum(q_sorted, 1.0)
    return q


def bootstrap_ci(
    group_a: Sequence[int] | np.ndarray,
    group_b: Sequence[int] | np.ndarray,
    resamples: int = 10_000,
    seed: int = 42,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile interval for accuracy(A) - accuracy(B).

    Each group is resampled with replacement at its own size.  For 0/1
    outcomes the resampled success count is Binomial(n, p_hat), which is drawn
    directly instead of materializing index arrays.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("bootstrap_ci needs two nonempty groups")
    if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
        raise ValueError("bootstrap_ci expects binary outcomes")
    rng = np.random.default_rng(seed)
    ka = rng.binomial(a.size, a.mean(), size=resamples)
    kb = rng.binomial(b.size, b.mean(), size=resamples)
    diffs = ka / a.size - kb / b.size
    tail = (1.0 - level) / 2.0 * 100.0
    lo, hi = np.percentile(diffs, [tail, 100.0 - tail])
    return float(lo), float(hi)


def midranks(values: Sequence[float]) -> np.ndarray:
    return _sps.rankdata(values, method="average")


class Correlation(NamedTuple):
    rho: float
    p: float


def spearman_drift(values: Sequence[float]) -> Correlation:
    """Spearman correlation of ``values`` against their position 1..n.

    Ties get midranks; the p-value uses the t approximation with n - 2
    degrees of freedom.  Constant input has no defined correlation and yields
    ``(nan, nan)``.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    if n < 3:
        raise ValueError("spearman_drift needs at least 3 observations")
    ry = midranks(y)
    if np.all(ry == ry[0]):
        return Correlation(math.nan, math.nan)
    rx = np.arange(1, n + 1, dtype=float)
    rho = float(np.corrcoef(rx, ry)[0, 1])
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return Correlation(rho, 0.0)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = float(2.0 * _sps.t.sf(abs(t), n - 2))
    return Correlation(rho, p)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson correlation, or None when either vector has zero variance."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.size < 2:
        raise ValueError("pearson_r needs two equal-length vectors of length >= 2")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        return None
    return max(-1.0, min(1.0, float(dx @ dy) / (sx * sy)))


@dataclass(frozen=True)
class CorrelationMatrix:
    models: tuple[str, ...]
    pairs: tuple[tuple[str, str, Optional[float]], ...]

    @property
    def defined(self) -> list[float]:
        return [r for _, _, r in self.pairs if r is not None]

    @property
    def mean(self) -> Optional[float]:
        vals = self.defined
        return sum(vals) / len(vals) if vals else None

    @property
    def range(self) -> Optional[tuple[float, float]]:
        vals = self.defined
        return (min(vals), max(vals)) if vals else None

    def matrix(self) -> np.ndarray:
        idx = {m: i for i, m in enumerate(self.models)}
        out = np.full((len(self.models), len(self.models)), np.nan)
        np.fill_diagonal(out, 1.0)
        for m1, m2, r in self.pairs:
            if r is not None:
                out[idx[m1], idx[m2]] = out[idx[m2], idx[m1]] = r
        return out


def cross_model_correlation(effects: Mapping[str, Sequence[float]]) -> CorrelationMatrix:
    """Pearson r for every unordered pair of models' per-task effect vectors."""
    models = tuple(effects)
    if len(models) < 2:
        raise ValueError("cross_model_correlation needs at least two models")
    lengths = {len(v) for v in effects.values()}
    if len(lengths) != 1:
        raise ValueError("all effect vectors must have the same length")
    pairs = tuple(
        (m1, m2, pearson_r(effects[m1], effects[m2]))
        for m1, m2 in itertools.combinations(models, 2)
    )
    return CorrelationMatrix(models, pairs)


def _binom_pmf_exact(k: int, n: int, p0: Fraction) -> Fraction:
    return math.comb(n, k) * p0**k * (1 - p0) ** (n - k)


def _check_binom(k: int, n: int, p0: float) -> Fraction:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 out of range: {p0}")
    return Fraction(p0)


def binomial_tail_exact(k: int, n: int, p0: float) -> Fraction:
    """P(X >= k) for X ~ Binomial(n, p0), as an exact rational."""
    q = _check_binom(k, n, p0)
    return sum((_binom_pmf_exact(j, n, q) for j in range(k, n + 1)), Fraction(0))


def binomial_cdf_exact(k: int, n: int, p0: float) -> Fraction:
    """P(X <= k) as an exact rational; k may be -1 (empty sum)."""
    if k < 0:
        return Fraction(0)
    q = _check_binom(k, n, p0)
    return sum((_binom_pmf_exact(j, n, q) for j in range(0, k + 1)), Fraction(0))


def binomial_tail(k: int, n: int, p0: float) -> float:
    return float(binomial_tail_exact(k, n, p0))


# Directional predictions for E-Prime vs control, by task type.
EPRIME_PREDICTIONS: dict[str, str] = {
    "syllogisms": "degrade",
    "causal": "improve",
    "analogical": "improve",
    "classification": "degrade",
    "epistemic": "improve",
    "ethical": "improve",
    "math": "neutral",
}


@dataclass(frozen=True)
class PredictionCheck:
    hits: int
    total: int
    p: float
    outcomes: tuple[tuple[str, str, float, bool], ...]


def prediction_check(
    deltas: Mapping[str, float],
    predictions: Mapping[str, str] = EPRIME_PREDICTIONS,
    neutral_band: float = 0.02,
    base_rate: float = 0.5,
) -> PredictionCheck:
    """Score directional predictions against observed accuracy deltas.

    "improve"/"degrade" match on sign; "neutral" matches when the absolute
    delta stays within ``neutral_band``.  The p-value is the one-sided binomial
    tail of the hit count at ``base_rate``.
    """
    outcomes = []
    for task, direction in predictions.items():
        if task not in deltas:
            continue
        delta = deltas[task]
        if direction == "improve":
            hit = delta > 0
        elif direction == "degrade":
            hit = delta < 0
        elif direction == "neutral":
            hit = abs(delta) <= neutral_band
        else:
            raise ValueError(f"unknown prediction {direction!r} for {task}")
        outcomes.append((task, direction, delta, bool(hit)))
    hits = sum(o[3] for o in outcomes)
    n = len(outcomes)
    p = binomial_tail(hits, n, base_rate) if n else math.nan
    return PredictionCheck(hits, n, p, tuple(outcomes))
