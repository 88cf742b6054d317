import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pssmp_lab.errors import DegenerateDesign, EmptySample, InvalidParam
from pssmp_lab.stats_verify import (
    EmpiricalCdf,
    bootstrap_ci,
    ks_two_sample,
    ks_vs_cdf,
    tail_index_fit,
    wilson_interval,
)

uniform_cdf = lambda v: np.clip(v, 0.0, 1.0)


def test_empirical_cdf():
    F = EmpiricalCdf.from_sample([3.0, 1.0, 2.0, 2.0])
    assert list(F.values) == [1.0, 2.0, 2.0, 3.0]
    assert F(2.0) == 0.75 and F(0.5) == 0.0 and F(3.0) == 1.0
    with pytest.raises(EmptySample):
        EmpiricalCdf.from_sample([])


def test_ks_calibration():
    rng = np.random.default_rng(1)
    n = 10 ** 4
    hits = sum(ks_vs_cdf(rng.uniform(size=n), uniform_cdf)[0] < 1.63 / math.sqrt(n)
               for _ in range(100))
    assert hits >= 99


def test_ks_single_point_step():
    step = lambda v: (np.asarray(v) >= 0.5).astype(float)
    for n in (1, 10, 1000):
        d, _ = ks_vs_cdf(np.full(n, 0.5), step)
        assert d <= 1 / n


def test_ks_discrete_atoms():
    # Bernoulli(1/2) on {0, 1}: one-sided errors only at the atoms
    x = np.array([0.0] * 40 + [1.0] * 60)
    cdf = lambda v: np.where(np.asarray(v) < 0, 0.0, np.where(np.asarray(v) < 1, 0.5, 1.0))
    assert ks_vs_cdf(x, cdf)[0] == pytest.approx(0.1)


def test_ks_matches_reference_on_frozen_sample():
    x = np.random.default_rng(20240601).uniform(size=1000)
    d, p = ks_vs_cdf(x, uniform_cdf)
    ref = stats.kstest(x, "uniform", method="asymp")
    assert abs(d - ref.statistic) < 1e-12
    assert abs(p - ref.pvalue) < 1e-12


def test_two_sample_trivial_cases():
    a = np.random.default_rng(0).normal(size=100)
    assert ks_two_sample(a, a)[0] == 0.0
    assert ks_two_sample(a, a + 100)[0] == 1.0
    with pytest.raises(EmptySample):
        ks_two_sample([], a)


def test_two_sample_matches_reference():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=700), rng.normal(0.1, size=900)
    ref = stats.ks_2samp(a, b, method="asymp")
    assert abs(ks_two_sample(a, b)[0] - ref.statistic) < 1e-12


def test_two_sample_calibration():
    rng = np.random.default_rng(9)
    ps = [ks_two_sample(rng.uniform(size=10 ** 4), rng.uniform(size=10 ** 4))[1] for _ in range(100)]
    assert 0.3 <= float(np.median(ps)) <= 0.7


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_ks_invariance_under_monotone_transform(seed):
    x = np.random.default_rng(seed).exponential(size=300)
    cdf = lambda v: 1 - np.exp(-np.maximum(v, 0))
    d1, _ = ks_vs_cdf(x, cdf)
    d2, _ = ks_vs_cdf(np.log(x), lambda u: cdf(np.exp(u)))
    assert abs(d1 - d2) < 1e-12
    y = np.random.default_rng(seed + 1).exponential(size=200)
    assert ks_two_sample(x, y)[0] == ks_two_sample(np.log(x), np.log(y))[0]


@pytest.mark.parametrize("g", [1.0, 2.5])
def test_tail_fit_exact(g):
    eps = 2.0 ** -np.arange(1, 10)
    slope, icpt, se = tail_index_fit(eps, eps ** g)
    assert abs(slope - g) < 1e-12 and abs(icpt) < 1e-11 and se < 1e-10


def test_tail_fit_weighted_recovers_slope():
    eps = 2.0 ** -np.arange(1, 10)
    rng = np.random.default_rng(3)
    n = 50000
    p = rng.binomial(n, eps) / n
    slope, _, se = tail_index_fit(eps, p, n * p / (1 - p))
    assert abs(slope - 1) < 4 * se + 1e-3


def test_tail_fit_degenerate():
    with pytest.raises(DegenerateDesign):
        tail_index_fit([0.5, 0.25, 0.125], [0.5, 0.25, 0.125])
    with pytest.raises(DegenerateDesign):
        tail_index_fit([0.5, 0.25, 0.125, 0.1], [0.5, 0.0, 0.1, 0.1])
    with pytest.raises(DegenerateDesign):
        tail_index_fit([0.5] * 4, [0.5, 0.4, 0.3, 0.2])


def test_bootstrap_constant_sample():
    lo, hi = bootstrap_ci(np.mean, np.full(50, 3.0), 200, 0.95, np.random.default_rng(0))
    assert lo == hi == 3.0
    with pytest.raises(InvalidParam):
        bootstrap_ci(np.mean, np.ones(5), 100, 0.95, np.random.default_rng(0))


def test_bootstrap_coverage():
    rng = np.random.default_rng(11)
    covered = 0
    for _ in range(100):
        x = rng.uniform(size=10 ** 4)
        lo, hi = bootstrap_ci(np.mean, x, 200, 0.95, rng)
        covered += lo <= 0.5 <= hi
    assert 88 <= covered <= 100


def test_bootstrap_golden():
    x = np.random.default_rng(2026).standard_normal(500)
    lo, hi = bootstrap_ci(np.mean, x, 400, 0.9, np.random.default_rng(1))
    assert (lo, hi) == (-0.045246359197431266, 0.11035731525468141)


def test_wilson():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0.2 < hi < 0.35
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(1 - hi)
    assert wilson_interval(0, 0) == (0.0, 1.0)
