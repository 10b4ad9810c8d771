"""Ordinary least squares with coefficient tests, t-tests, and t-distribution helpers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from .errors import PararankError


def t_cdf(x: float, df: float) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    if df <= 0:
        raise PararankError(f"degrees of freedom must be positive, got {df}")
    x = float(x)
    if x == 0.0:
        return 0.5
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + x * x)))
    return 1.0 - tail if x > 0 else tail


def t_ppf(q: float, df: float) -> float:
    """Inverse t CDF by bisection (deterministic, ~1e-12 accurate)."""
    if not 0.0 < q < 1.0:
        raise PararankError(f"quantile must lie in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    lo, hi = -1.0, 1.0
    while t_cdf(lo, df) > q:
        lo *= 2.0
    while t_cdf(hi, df) < q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class OlsFit:
    """Coefficients with standard errors and two-sided t-tests against zero."""

    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    df_resid: int
    r_squared: float
    n_obs: int

    def coefficient(self, name: str) -> tuple[float, float]:
        """(estimate, p-value) for one predictor."""
        i = self.names.index(name)
        return float(self.coef[i]), float(self.p_values[i])


def ols_fit(
    X: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] | None = None,
    add_intercept: bool = True,
) -> OlsFit:
    """Least squares via QR, with per-coefficient SE, t and p values.

    ``X`` holds one column per predictor.  An intercept column is prepended
    unless disabled.  Rank deficiency is reported with the offending column
    names rather than silently pseudo-inverted.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 1 and X.shape[1] > 1 and len(np.asarray(y)) == X.shape[1]:
        X = X.T
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if names is None:
        names = [f"x{i}" for i in range(k)]
    names = list(names)
    if len(names) != k:
        raise PararankError(f"{k} predictors but {len(names)} names")
    if add_intercept:
        X = np.column_stack([np.ones(n), X])
        names = ["intercept"] + names
    p = X.shape[1]
    if n <= p:
        raise PararankError(f"need more than {p} observations, got {n}")
    q_mat, r_mat = np.linalg.qr(X)
    diag = np.abs(np.diag(r_mat))
    bad = diag < max(diag.max(), 1.0) * 1e-10
    if bad.any():
        culprits = [names[i] for i in np.nonzero(bad)[0]]
        raise PararankError(f"design matrix is rank deficient; collinear columns: {culprits}")
    coef = solve_triangular(r_mat, q_mat.T @ y)
    resid = y - X @ coef
    df_resid = n - p
    sigma2 = float(resid @ resid) / df_resid
    r_inv = solve_triangular(r_mat, np.eye(p))
    se = np.sqrt(sigma2 * np.sum(r_inv * r_inv, axis=1))
    t_stats = coef / se
    p_values = np.array([2.0 * (1.0 - t_cdf(abs(t), df_resid)) for t in t_stats])
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2)) if add_intercept else float(y @ y)
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return OlsFit(tuple(names), coef, se, t_stats, p_values, df_resid, r_squared, n)


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    pvalue: float
    means: tuple[float, ...]


def one_sample_ttest(xs: Sequence[float], mu0: float = 0.0) -> TTestResult:
    xs = np.asarray(xs, dtype=np.float64)
    n = len(xs)
    if n < 2:
        raise PararankError("one-sample t-test needs at least two observations")
    s = xs.std(ddof=1)
    if s == 0.0:
        raise PararankError("zero variance sample")
    t = (xs.mean() - mu0) / (s / np.sqrt(n))
    p = 2.0 * (1.0 - t_cdf(abs(t), n - 1))
    return TTestResult(float(t), float(n - 1), float(p), (float(xs.mean()),))


def welch_ttest(xs: Sequence[float], ys: Sequence[float]) -> TTestResult:
    """Two-sample t-test without the equal-variance assumption (Satterthwaite df)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 2 or len(ys) < 2:
        raise PararankError("each sample needs at least two observations")
    vx, vy = xs.var(ddof=1), ys.var(ddof=1)
    if vx == 0.0 and vy == 0.0:
        raise PararankError("degenerate samples: both variances are zero")
    ax, ay = vx / len(xs), vy / len(ys)
    t = (xs.mean() - ys.mean()) / np.sqrt(ax + ay)
    df = (ax + ay) ** 2 / (
        (ax**2 / (len(xs) - 1) if ax else 0.0) + (ay**2 / (len(ys) - 1) if ay else 0.0)
    )
    p = 2.0 * (1.0 - t_cdf(abs(t), df))
    return TTestResult(float(t), float(df), float(p), (float(xs.mean()), float(ys.mean())))


def mean_ci95(xs: Sequence[float]) -> tuple[float, float]:
    """Sample mean and the halfwidth of its 95% confidence interval."""
    xs = np.asarray(xs, dtype=np.float64)
    n = len(xs)
    if n < 2:
        raise PararankError("confidence interval needs at least two observations")
    halfwidth = t_ppf(0.975, n - 1) * xs.std(ddof=1) / np.sqrt(n)
    return float(xs.mean()), float(halfwidth)
