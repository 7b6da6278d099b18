"""Logistic GEE with an exchangeable working correlation.

Marginal logistic regression of a binary outcome on condition indicators
(reference condition absorbed into the intercept), observations clustered by
item.  Coefficients solve the generalized estimating equations by Fisher
scoring; the common within-cluster correlation is re-estimated from Pearson
residual cross-products after every step.  Standard errors come from the
sandwich (robust) covariance; model-based errors use binomial scale 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np
from scipy import special, stats

MAX_ITER = 100
TOL = 1e-8
_ETA_CLIP = 30.0


class GeeError(ValueError):
    pass


@dataclass(frozen=True)
class GeeFit:
    terms: tuple[str, ...]
    coefficients: np.ndarray
    robust_se: np.ndarray
    model_se: np.ndarray
    alpha: float
    iterations: int
    converged: bool
    n_obs: int
    n_clusters: int
    max_cluster_size: int
    separated: tuple[str, ...] = field(default=())

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.robust_se

    @property
    def p(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    def coef(self, term: str) -> float:
        return float(self.coefficients[self.terms.index(term)])

    def to_records(self) -> list[dict]:
        z, p = self.z, self.p
        return [
            {
                "term": t,
                "coef": float(self.coefficients[i]),
                "robust_se": float(self.robust_se[i]),
                "model_se": float(self.model_se[i]),
                "z": float(z[i]),
                "p": float(p[i]),
            }
            for i, t in enumerate(self.terms)
        ]


def _cluster_index(clusters: Sequence[Hashable]) -> tuple[np.ndarray, np.ndarray]:
    """Stable sort order grouping clusters, and start offsets of each group."""
    keys: dict[Hashable, int] = {}
    codes = np.fromiter((keys.setdefault(c, len(keys)) for c in clusters), dtype=np.int64,
                        count=len(clusters))
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    starts = np.flatnonzero(np.r_[True, sorted_codes[1:] != sorted_codes[:-1]])
    return order, starts


class _Clustered:
    def __init__(self, X: np.ndarray, y: np.ndarray, clusters: Sequence[Hashable]):
        order, starts = _cluster_index(clusters)
        self.X = X[order]
        self.y = y[order]
        self.starts = starts
        self.sizes = np.diff(np.r_[starts, len(y)])
        self.n_pairs = int((self.sizes * (self.sizes - 1) // 2).sum())

    def csum(self, a: np.ndarray) -> np.ndarray:
        return np.add.reduceat(a, self.starts, axis=0)

    def pieces(self, beta: np.ndarray):
        eta = np.clip(self.X @ beta, -_ETA_CLIP, _ETA_CLIP)
        mu = special.expit(eta)
        v = mu * (1.0 - mu)
        sv = np.sqrt(v)
        Xt = self.X * sv[:, None]
        rt = (self.y - mu) / sv
        return Xt, rt

    def estimate_alpha(self, rt: np.ndarray, n_params: int) -> float:
        denom_pairs = self.n_pairs - n_params
        if denom_pairs <= 0:
            return 0.0
        n = rt.size
        scale = float(rt @ rt) / (n - n_params)
        t = self.csum(rt)
        ss = self.csum(rt * rt)
        cross = float(((t * t - ss) / 2.0).sum())
        return cross / denom_pairs / scale

    def equations(self, Xt: np.ndarray, rt: np.ndarray, alpha: float):
        """Per-cluster scores and the summed bread matrix under R(alpha)."""
        m = self.sizes.astype(float)
        lower = -1.0 / (m.max() - 1.0) if m.max() > 1 else -np.inf
        if not (lower < alpha < 1.0):
            raise GeeError(f"singular working covariance: alpha={alpha:.6g} outside "
                           f"({lower:.6g}, 1)")
        c = alpha / (1.0 + (m - 1.0) * alpha)
        s = self.csum(Xt)                  # (K, p)
        t = self.csum(rt)                  # (K,)
        xr = self.csum(Xt * rt[:, None])   # (K, p)
        scores = (xr - (c * t)[:, None] * s) / (1.0 - alpha)
        bread = (Xt.T @ Xt - (s * c[:, None]).T @ s) / (1.0 - alpha)
        return scores, bread


def gee_fit(
    X: np.ndarray,
    y: Sequence[float],
    clusters: Sequence[Hashable],
    terms: Optional[Sequence[str]] = None,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    alpha: Optional[float] = None,
) -> GeeFit:
    """Fit a logistic GEE on an explicit design matrix.

    Pass ``alpha`` to hold the working correlation fixed (``alpha=0`` gives
    ordinary logistic regression).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size or len(clusters) != y.size:
        raise ValueError("X, y and clusters must agree in length")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("outcomes must be 0/1")
    n, k = X.shape
    terms = tuple(terms) if terms is not None else tuple(f"x{i}" for i in range(k))
    data = _Clustered(X, y, clusters)

    beta = np.zeros(k)
    a = 0.0 if alpha is None else float(alpha)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Xt, rt = data.pieces(beta)
        scores, bread = data.equations(Xt, rt, a)
        try:
            step = np.linalg.solve(bread, scores.sum(axis=0))
        except np.linalg.LinAlgError as exc:
            raise GeeError(f"singular estimating equations: {exc}") from exc
        beta = beta + step
        if alpha is None:
            _, rt = data.pieces(beta)
            a = data.estimate_alpha(rt, k)
        if np.max(np.abs(step)) < tol:
            converged = True
            break

    Xt, rt = data.pieces(beta)
    scores, bread = data.equations(Xt, rt, a)
    try:
        bread_inv = np.linalg.inv(bread)
    except np.linalg.LinAlgError as exc:
        raise GeeError(f"singular estimating equations: {exc}") from exc
    meat = scores.T @ scores
    robust = bread_inv @ meat @ bread_inv
    return GeeFit(
        terms=terms,
        coefficients=beta,
        robust_se=np.sqrt(np.clip(np.diag(robust), 0.0, None)),
        model_se=np.sqrt(np.diag(bread_inv)),
        alpha=float(a),
        iterations=it,
        converged=converged,
        n_obs=n,
        n_clusters=len(data.starts),
        max_cluster_size=int(data.sizes.max()) if n else 0,
    )


def gee_logistic(
    outcomes: Sequence[int],
    conditions: Sequence[str],
    clusters: Sequence[Hashable],
    reference: str = "control",
    levels: Optional[Sequence[str]] = None,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    alpha: Optional[float] = None,
) -> GeeFit:
    """Logistic GEE of outcome on condition indicators, clustered by item.

    Terms are ``intercept`` (the reference condition's log-odds) followed by
    one indicator per other condition.  A condition whose outcomes are all
    identical separates the data completely; the fit then reports
    ``converged=False`` and names it in ``separated``.
    """
    y = np.asarray(outcomes, dtype=float)
    conds = [str(c) for c in conditions]
    if len(conds) != y.size or len(clusters) != y.size:
        raise ValueError("outcomes, conditions and clusters must agree in length")
    if any(c is None for c in clusters):
        raise ValueError("every row needs a cluster id")
    present = list(dict.fromkeys(conds))
    if reference not in present:
        raise ValueError(f"reference condition {reference!r} has no rows")
    if len(present) < 2:
        raise ValueError("need at least two conditions")
    if levels is None:
        others = sorted(c for c in present if c != reference)
    else:
        others = [c for c in levels if c != reference and c in present]
    X = np.zeros((y.size, 1 + len(others)))
    X[:, 0] = 1.0
    col = {c: i + 1 for i, c in enumerate(others)}
    for r, c in enumerate(conds):
        if c in col:
            X[r, col[c]] = 1.0
    cond_arr = np.asarray(conds)
    separated = tuple(
        c for c in [reference, *others]
        if np.unique(y[cond_arr == c]).size == 1
    )
    fit = gee_fit(X, y, clusters, ("intercept", *others), max_iter, tol, alpha)
    if separated:
        fit = GeeFit(**{**fit.__dict__, "converged": False, "separated": separated})
    return fit
