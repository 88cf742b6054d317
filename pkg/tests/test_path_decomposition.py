import math

import numpy as np
import pytest

from pssmp_lab import LevyModel, StopRule, TwoSidedExponential, additive_functional, sample_skeleton
from pssmp_lab import path_decomposition as pd
from pssmp_lab import to_pssmp
from pssmp_lab.errors import IdentityViolation, NotApplicable
from pssmp_lab.lamperti import _to_space
from pssmp_lab.levy_model import SkeletonPath, default_rise_level
from pssmp_lab.stats_verify import ks_two_sample, ks_vs_cdf

from conftest import BM, KOU_LC3, SPEC_POS

SPEC_NEG = LevyModel(1.0, 1.0, 1.0, TwoSidedExponential(0.0, 1.0, 3.0))


def skeleton(times, values, left=None, tags=None):
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    left = values.copy() if left is None else np.asarray(left, float)
    if tags is None:
        tags = np.ones(len(times), np.int8)
        tags[0] = 0
    return SkeletonPath(times, values, left, np.asarray(tags, np.int8), np.minimum(values, left))


def run_to_rise(m, rng, step=0.05, bridge=False, rise=None):
    rise = default_rise_level(m) if rise is None else rise
    return sample_skeleton(m, math.inf, step, rng, bridge_min=bridge,
                           stop_rule=StopRule(rise_above_min=rise))


def test_monotone_path():
    d = pd.min_split_levy(skeleton([0, 1, 2], [0, 1, 2]))
    assert d.min_value == 0 and d.argmin_last == 0 and len(d.pre) == 0
    assert d.post.values[0] == 0


def test_v_shape():
    d = pd.min_split_levy(skeleton([0, 1, 2], [0, -1, 3]))
    assert d.min_value == -1 and d.argmin_last == 1
    np.testing.assert_array_equal(d.post.values, [0, 4])
    assert d.post.origin == 1


def test_last_attainment_wins_ties():
    d = pd.min_split_levy(skeleton([0, 1, 2, 3, 4], [0, -1, 0, -1, 2]))
    assert d.argmin_last == 3


def test_jump_at_minimum():
    # upward jump out of the minimum: the left limit attains it
    tags = [0, 1, 2, 1]
    d = pd.min_split_levy(skeleton([0, 1, 2, 3], [0, -1, 1.5, 2], [0, -1, -2, 2], tags))
    assert d.where == "left" and d.min_value == -2
    assert d.jump_at_min == pytest.approx(3.5)
    assert d.post.left[0] == 0 and d.post.values[0] == pytest.approx(3.5)


def test_constant_pssmp_minimum():
    sk = skeleton([0, 1, 2], [0, 0, 0])
    tc = additive_functional(sk)
    d = pd.min_split_pssmp(to_pssmp(sk, 2.0, 1.0, tc), sk, tc)
    # every record attains the minimum; the last one is reported
    assert d.min_value == 2.0 and d.argmin_last == 2.0 * 2.0


def test_identity_violation_detected():
    sk = skeleton([0, 1, 2], [0, -1, 1])
    tc = additive_functional(sk)
    p = to_pssmp(sk, 1.0, 1.0, tc)
    p.values[1] *= 1.0 + 1e-9
    p.left[1] *= 1.0 + 1e-9
    with pytest.raises(IdentityViolation):
        pd.min_split_pssmp(p, sk, tc)


@pytest.mark.parametrize("m, alpha", [(BM, 1.0), (KOU_LC3, 1.0), (SPEC_POS, 2.0)])
@pytest.mark.parametrize("bridge", [False, True])
def test_identities_on_sampled_paths(m, alpha, bridge):
    rng = np.random.Generator(np.random.Philox(21))
    for _ in range(40):
        sk = run_to_rise(m, rng, 0.02, bridge)
        tc = additive_functional(sk, alpha)
        x = float(rng.uniform(0.1, 10))
        p = to_pssmp(sk, x, alpha, tc)
        d = pd.min_split_pssmp(p, sk, tc, bridge)
        lev = pd.min_split_levy(sk, bridge)
        assert d.min_value == float(_to_space(x, lev.min_value))
        assert abs(d.argmin_last - x ** (1 / alpha) * float(tc(lev.argmin_last))) <= 1e-9
        assert d.min_value <= p.values.min() and lev.min_value <= sk.values.min()
        if bridge:
            assert lev.min_value <= sk.bridge_min[1:].min()


def test_reconstruct_constant():
    post = pd.PathSegment(np.array([0.0, 1.0, 2.0]), np.zeros(3), np.zeros(3),
                          np.array([0, 1, 1], np.int8))
    out = pd.reconstruct_post(0.3, post)
    np.testing.assert_array_equal(out.values, 0.3)
    np.testing.assert_allclose(out.times, [0, 0.3, 0.6])


@pytest.mark.parametrize("m, alpha", [(BM, 1.0), (KOU_LC3, 1.0), (SPEC_POS, 2.0)])
def test_reconstruction_matches_direct(m, alpha):
    rng = np.random.Generator(np.random.Philox(8))
    for _ in range(40):
        sk = run_to_rise(m, rng, 0.02)
        tc = additive_functional(sk, alpha)
        p = to_pssmp(sk, 1.7, alpha, tc)
        d = pd.min_split_pssmp(p, sk, tc, use_bridge=False)
        lev = pd.min_split_levy(sk, use_bridge=False)
        rec = pd.reconstruct_post(d.min_value, lev.post, alpha, origin=d.argmin_last)
        assert pd.max_relative_error(rec, d.post) < 1e-9
        assert rec.origin + rec.times[0] == d.argmin_last


def test_levy_minimum_is_exponential():
    rng = np.random.Generator(np.random.Philox(31))
    # the bridge makes the minimum law exact on any grid
    mins = np.array([pd.min_split_levy(run_to_rise(BM, rng, 0.5, True)).min_value
                     for _ in range(5 * 10 ** 4)])
    d, _ = ks_vs_cdf(-mins, lambda v: 1 - np.exp(-np.maximum(v, 0)))
    assert d < 0.015


@pytest.mark.parametrize("m", [BM, KOU_LC3])
def test_no_jump_at_minimum_with_gaussian_part(m):
    rng = np.random.Generator(np.random.Philox(2))
    jumps = [pd.min_split_levy(run_to_rise(m, rng, 0.05, True)).jump_at_min for _ in range(2000)]
    assert np.count_nonzero(np.abs(jumps) > 0) == 0


def test_pre_post_independence_proxy():
    rng = np.random.Generator(np.random.Philox(17))
    y, delta, t0 = 0.5, 0.05, 0.5
    pre, post = [], []
    for _ in range(2 * 10 ** 4):
        sk = run_to_rise(BM, rng, 0.05)
        tc = additive_functional(sk)
        p = to_pssmp(sk, 1.0, 1.0, tc)
        d = pd.min_split_pssmp(p, sk, tc, use_bridge=False)
        if y <= d.min_value <= y * (1 + delta):
            pre.append(d.argmin_last)
            post.append(p.value_at(d.argmin_last + t0) / d.min_value)
    n = len(pre)
    r = np.corrcoef(pre, post)[0, 1]
    assert n > 300
    assert abs(r) < 4 / math.sqrt(n)


# --- last passage ----------------------------------------------------------


def test_last_passage_monotone():
    sk = skeleton([0, 1, 2], [0, 1, 2])
    p = to_pssmp(sk, 1.0)
    y = math.e
    t = pd.last_passage(p, y)
    # X is linear between records in this representation
    i = np.searchsorted(p.values, y)
    f = (y - p.values[i - 1]) / (p.values[i] - p.values[i - 1])
    assert t == pytest.approx(p.times[i - 1] + f * (p.times[i] - p.times[i - 1]))


def test_last_passage_edge_cases():
    p = to_pssmp(skeleton([0, 1], [0, 1]), 1.0)
    assert pd.last_passage(p, 10.0) == math.inf  # ends below y
    assert pd.last_passage(p, 1.0) == 0.0
    assert pd.last_passage(to_pssmp(skeleton([0, 1], [0, 1]), 2.0), 1.0) is None


def test_last_passage_rejects_positive_jumps():
    rng = np.random.default_rng(0)
    p = to_pssmp(run_to_rise(SPEC_POS, rng), 1.0)
    with pytest.raises(NotApplicable):
        pd.last_passage(p, 0.5)


def test_post_last_passage_law_equals_post_minimum_law():
    """Shifted at the last passage through y, the path has the law of the
    post-minimum process given I^X = y.  Self-similarity gives the latter
    from any I^X by rescaling, so the conditioning bin can be wide."""
    rng = np.random.Generator(np.random.Philox(44))
    y, t0 = 0.5, 1.0
    after_pass, after_min = [], []
    while min(len(after_pass), len(after_min)) < 2 * 10 ** 4:
        # a new minimum after a rise of 12 has probability below 1e-8; the
        # clock target keeps the path long enough to evaluate at s + t0
        sk = sample_skeleton(SPEC_NEG, math.inf, 0.02, rng, stop_rule=StopRule(
            rise_above_min=12.0, a_target=50.0, require_all=True))
        tc = additive_functional(sk)
        p = to_pssmp(sk, 1.0, 1.0, tc)
        d = pd.min_split_pssmp(p, sk, tc, use_bridge=False)
        if d.min_value < y:
            if len(after_pass) < 2 * 10 ** 4:
                s = pd.last_passage(p, y)
                after_pass.append(p.value_at(s + t0))
        elif len(after_min) < 2 * 10 ** 4:
            c = y / d.min_value
            after_min.append(c * p.value_at(d.argmin_last + t0 / c))
    dks, _ = ks_two_sample(after_pass, after_min)
    assert dks < 0.05
