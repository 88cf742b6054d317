"""Measurement instruments: empirical CDFs, KS tests, tail-index regression,
bootstrap and binomial intervals.

p-values are asymptotic (Kolmogorov distribution), which is accurate at the
sample sizes used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import kolmogorov

from .errors import DegenerateDesign, EmptySample, InvalidParam


@dataclass(frozen=True)
class EmpiricalCdf:
    values: np.ndarray
    n: int

    @classmethod
    def from_sample(cls, sample):
        x = np.sort(np.asarray(sample, dtype=float), kind="stable")
        if len(x) == 0:
            raise EmptySample("empty sample")
        return cls(x, len(x))

    def __call__(self, v):
        return np.searchsorted(self.values, v, side="right") / self.n


def ks_vs_cdf(sample, cdf: Callable) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value.

    Both sides of every distinct sample value are compared, the left side
    against ``cdf`` just below the value, so ties and cdfs with atoms are
    handled; for a continuous cdf this is the usual statistic.
    """
    x = np.sort(np.asarray(sample, dtype=float), kind="stable")
    n = len(x)
    if n == 0:
        raise EmptySample("empty sample")
    u, counts = np.unique(x, return_counts=True)
    above = np.cumsum(counts) / n
    below = above - counts / n
    f = np.asarray(cdf(u), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(u, -np.inf)), dtype=float)
    d = max(float(np.max(np.abs(above - f))), float(np.max(np.abs(below - f_left))))
    return d, float(kolmogorov(math.sqrt(n) * d))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float), kind="stable")
    b = np.sort(np.asarray(b, dtype=float), kind="stable")
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise EmptySample("empty sample")
    grid = np.concatenate((a, b))
    fa = np.searchsorted(a, grid, side="right") / na
    fb = np.searchsorted(b, grid, side="right") / nb
    d = float(np.max(np.abs(fa - fb)))
    ne = na * nb / (na + nb)
    return d, float(kolmogorov(math.sqrt(ne) * d))


def tail_index_fit(eps, p, weights=None):
    """Weighted least squares of ``log p`` on ``log eps``.

    ``weights`` default to 1; with binomial estimates from ``N`` paths use
    ``N p / (1 - p)``, the inverse variance of ``log p_hat``.

    Returns ``(slope, intercept, slope_stderr)``.
    """
    eps = np.asarray(eps, dtype=float)
    p = np.asarray(p, dtype=float)
    if len(eps) < 4 or len(eps) != len(p):
        raise DegenerateDesign("need at least 4 matching points")
    if np.any(p <= 0) or np.any(eps <= 0):
        raise DegenerateDesign("probabilities and levels must be positive")
    w = np.ones_like(p) if weights is None else np.asarray(weights, dtype=float)
    X = np.column_stack((np.ones_like(eps), np.log(eps)))
    y = np.log(p)
    XtW = X.T * w
    M = XtW @ X
    if np.linalg.cond(M) > 1e12:
        raise DegenerateDesign("levels do not span a range")
    beta = np.linalg.solve(M, XtW @ y)
    r = y - X @ beta
    s2 = float(np.sum(w * r * r)) / (len(y) - 2)
    cov = s2 * np.linalg.inv(M)
    return float(beta[1]), float(beta[0]), float(math.sqrt(max(cov[1, 1], 0.0)))


def bootstrap_ci(statistic: Callable, sample, B: int, level: float,
                 rng: np.random.Generator) -> tuple[float, float]:
    """Percentile bootstrap interval."""
    if B < 200:
        raise InvalidParam("bootstrap needs B >= 200")
    x = np.asarray(sample)
    n = len(x)
    if n == 0:
        raise EmptySample("empty sample")
    stats = np.empty(B)
    for b in range(B):
        stats[b] = statistic(x[rng.integers(0, n, n)])
    a = (1 - level) / 2
    lo, hi = np.quantile(stats, [a, 1 - a])
    return float(lo), float(hi)


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    w = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # clamps keep p inside the interval when k is 0 or n (rounding)
    return max(0.0, min(p, c - w)), min(1.0, max(p, c + w))
