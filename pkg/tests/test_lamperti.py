import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pssmp_lab import (
    LampertiClass,
    LevyModel,
    StopRule,
    additive_functional,
    classify,
    from_pssmp,
    invert_time,
    sample_skeleton,
    to_pssmp,
)
from pssmp_lab.errors import InvalidParam, NotAbsorbed
from pssmp_lab.lamperti import absorption_stats, path_from_csv, path_to_csv, sample_pssmp
from pssmp_lab.levy_model import SkeletonPath, default_rise_level
from pssmp_lab.stats_verify import ks_two_sample

from conftest import BM, KOU_KILLED, KOU_LC3, MODELS, SPEC_POS


def skeleton(times, values, left=None, tags=None, **kw):
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    left = values.copy() if left is None else np.asarray(left, float)
    if tags is None:
        tags = np.ones(len(times), np.int8)
        tags[0] = 0
    return SkeletonPath(times, values, left, np.asarray(tags, np.int8),
                        np.minimum(values, left), **kw)


def random_skeleton(seed, name=None, horizon=20.0, step=0.05):
    rng = np.random.Generator(np.random.Philox(seed))
    names = sorted(MODELS)
    m = MODELS[name or names[seed % len(names)]]
    return sample_skeleton(m, horizon, step, rng)


# --- additive functional ------------------------------------------------


def test_constant_path_identity_clock():
    sk = skeleton(np.linspace(0, 3, 7), np.zeros(7))
    tc = additive_functional(sk)
    np.testing.assert_allclose(tc.A, sk.times, rtol=0, atol=1e-15)
    assert tc.A_total == pytest.approx(3.0)
    assert invert_time(tc, 0.7) == pytest.approx(0.7, abs=1e-15)


def test_single_segment_closed_form():
    tc = additive_functional(skeleton([0.0, 1.0], [0.0, math.log(2)]))
    assert tc.A[-1] == pytest.approx(1 / math.log(2), rel=1e-15)


def test_within_segment_evaluation():
    tc = additive_functional(skeleton([0.0, 1.0], [0.0, math.log(2)]))
    s = 0.37
    assert float(tc(s)) == pytest.approx((2 ** s - 1) / math.log(2), rel=1e-14)


def test_alpha_two_segment():
    tc = additive_functional(skeleton([0.0, 2.0], [0.0, 1.0]), alpha=2.0)
    assert tc.A[-1] == pytest.approx(2 * (math.exp(0.5) - 1) / 0.5, rel=1e-14)


def trapezoid_oracle(sk, alpha=1.0, refine=100):
    total = 0.0
    for i in range(len(sk.times) - 1):
        s = np.linspace(sk.times[i], sk.times[i + 1], refine + 1)
        v = np.linspace(sk.values[i], sk.left[i + 1], refine + 1)
        total += np.trapezoid(np.exp(v / alpha), s) if hasattr(np, "trapezoid") else np.trapz(
            np.exp(v / alpha), s)
    return total


@pytest.mark.parametrize("seed", range(6))
def test_total_against_quadrature(seed):
    sk = random_skeleton(seed)
    tc = additive_functional(sk)
    assert abs(tc.A_total - trapezoid_oracle(sk)) <= 1e-6 * tc.A_total


def test_segments_layout():
    sk = random_skeleton(3)
    tc = additive_functional(sk)
    segs = tc.segments
    assert len(segs) == len(sk) - 1 and segs[0][3] == 0.0
    assert np.all(np.diff(tc.A) > 0)


def test_invert_beyond_total():
    tc = additive_functional(random_skeleton(1))
    assert invert_time(tc, tc.A_total) == math.inf
    assert invert_time(tc, tc.A_total * 2) == math.inf
    with pytest.raises(InvalidParam):
        invert_time(tc, -1.0)


@pytest.mark.parametrize("seed", range(5))
def test_invert_round_trip(seed):
    sk = random_skeleton(seed)
    tc = additive_functional(sk)
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, sk.times[-1] * (1 - 1e-9), 1000)
    assert np.max(np.abs(invert_time(tc, tc(s)) - s)) < 1e-10
    inner = sk.times[:-1]
    assert np.max(np.abs(invert_time(tc, tc.A[:-1]) - inner)) < 1e-10


# --- Lamperti map ----------------------------------------------------------


def test_constant_path_maps_to_constant():
    sk = skeleton(np.linspace(0, 5, 11), np.zeros(11))
    p = to_pssmp(sk, 3.0)
    assert np.all(p.values == 3.0) and p.T0 == math.inf
    np.testing.assert_allclose(p.times, 3.0 * sk.times)


def test_killed_path_absorbed_by_jump():
    rng = np.random.default_rng(4)
    sk = sample_skeleton(KOU_KILLED, math.inf, 0.01, rng)
    tc = additive_functional(sk)
    p = to_pssmp(sk, 2.0, 1.0, tc)
    assert p.T0 == 2.0 * tc.A_total and p.hit_by_jump
    assert p.values[-1] == 0.0 and p.terminal_value == 2.0 * math.exp(sk.left[-1])
    assert absorption_stats(p) == (p.T0, p.terminal_value, True)


@pytest.mark.parametrize("seed", range(5))
def test_scaling_is_exact(seed):
    sk = random_skeleton(seed)
    a, b = to_pssmp(sk, 1.0), to_pssmp(sk, 2.5)
    np.testing.assert_allclose(b.times, 2.5 * a.times, rtol=1e-15, atol=0)
    np.testing.assert_allclose(b.values, 2.5 * a.values, rtol=1e-15, atol=0)


def test_scaling_alpha_two():
    sk = random_skeleton(2)
    a, b = to_pssmp(sk, 1.0, 2.0), to_pssmp(sk, 4.0, 2.0)
    np.testing.assert_allclose(b.times, 2.0 * a.times, rtol=1e-15)
    np.testing.assert_allclose(b.values, 4.0 * a.values, rtol=1e-15)


def test_values_positive_and_time_zero():
    for seed in range(10):
        p = to_pssmp(random_skeleton(seed), 0.7)
        live = p.times < p.T0
        assert p.values[0] == 0.7 and p.times[0] == 0.0
        assert np.all(p.values[live] > 0)
        assert p.hit_by_jump == (p.terminal_value > 0)


def test_bad_start():
    with pytest.raises(InvalidParam):
        to_pssmp(random_skeleton(0), 0.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6), x=st.floats(0.01, 100.0), alpha=st.sampled_from([0.5, 1.0, 2.0]))
def test_round_trip_property(seed, x, alpha):
    sk = random_skeleton(seed, horizon=10.0, step=0.1)
    back = from_pssmp(to_pssmp(sk, x, alpha))
    assert np.max(np.abs(back.times - sk.times)) < 1e-9
    assert np.max(np.abs(back.values - sk.values)) < 1e-9
    assert np.max(np.abs(back.left - sk.left)) < 1e-9
    assert back.jump_count == sk.jump_count


def test_round_trip_thousand_paths():
    worst = 0.0
    for seed in range(1000):
        sk = random_skeleton(seed, horizon=5.0, step=0.1)
        back = from_pssmp(to_pssmp(sk, 1.0 + seed % 7))
        worst = max(worst, np.max(np.abs(back.times - sk.times)),
                    np.max(np.abs(back.values - sk.values)))
    assert worst < 1e-9


def test_constant_pssmp_gives_zero_levy():
    sk = skeleton(np.linspace(0, 2, 5), np.zeros(5))
    back = from_pssmp(to_pssmp(sk, 4.0))
    assert np.all(back.values == 0.0)


# --- classification --------------------------------------------------------


def test_classification_table():
    assert classify(LevyModel(1.0, 1.0, killing_rate=0.375)) is LampertiClass.LC1
    assert classify(LevyModel(-1.0, 1.0, killing_rate=0.375)) is LampertiClass.LC1
    assert classify(LevyModel(-0.5, 1.0)) is LampertiClass.LC2
    assert classify(LevyModel(0.5, 1.0)) is LampertiClass.LC3
    assert classify(LevyModel(0.0, 1.0)) is LampertiClass.LC3


def _outcome(m, rng):
    cls = classify(m)
    if cls is LampertiClass.LC3:
        sk = sample_skeleton(m, math.inf, 0.05, rng,
                             stop_rule=StopRule(rise_above_min=default_rise_level(m)))
        return to_pssmp(sk, 1.0)
    return sample_pssmp(m, 1.0, math.inf, 0.05, rng)[2]


@pytest.mark.parametrize("m, expected", [
    (KOU_KILLED, LampertiClass.LC1),
    (LevyModel(-0.5, 1.0), LampertiClass.LC2),
    (BM, LampertiClass.LC3),
])
def test_classification_agreement(m, expected):
    rng = np.random.Generator(np.random.Philox(11))
    assert classify(m) is expected
    for _ in range(1000):
        p = _outcome(m, rng)
        if expected is LampertiClass.LC3:
            with pytest.raises(NotAbsorbed):
                absorption_stats(p)
        else:
            T0, term, jump = absorption_stats(p)
            assert math.isfinite(T0)
            assert jump == (expected is LampertiClass.LC1)
            assert (term > 0) == jump


def test_T0_scaling_in_law():
    rng = np.random.Generator(np.random.Philox(5))
    a, b = [], []
    for i in range(10 ** 4):
        a.append(sample_pssmp(KOU_KILLED, 1.0, math.inf, 0.05, rng)[2].T0 / 1.0)
        b.append(sample_pssmp(KOU_KILLED, 3.0, math.inf, 0.05, rng)[2].T0 / 3.0)
    d, _ = ks_two_sample(a, b)
    assert d < 0.02


# --- value_at and CSV ----------------------------------------------------


def test_value_at_linear_in_root_alpha():
    sk = skeleton([0.0, 1.0], [0.0, math.log(4.0)])
    p = to_pssmp(sk, 1.0, 2.0)
    t_mid = 0.5 * p.times[1]
    assert p.value_at(t_mid) == pytest.approx(((1 + 2) / 2) ** 2)


def test_value_at_after_absorption_and_range():
    rng = np.random.default_rng(9)
    p = sample_pssmp(KOU_KILLED, 1.0, math.inf, 0.05, rng)[2]
    assert p.value_at(p.T0) == 0.0 and p.value_at(p.T0 + 10) == 0.0
    live = sample_pssmp(BM, 1.0, 1.0, 0.05, rng)[2]
    with pytest.raises(InvalidParam):
        live.value_at(live.times[-1] + 1.0)


def test_value_at_scalar_matches_vector():
    rng = np.random.default_rng(2)
    for _ in range(50):
        p = sample_pssmp(SPEC_POS, 1.0, 3.0, 0.02, rng, alpha=2.0)[2]
        ts = np.linspace(0, min(3.0, p.times[-1]), 41)
        np.testing.assert_allclose(p.value_at(ts), [p.value_at(float(t)) for t in ts], rtol=1e-14)


def test_csv_round_trip():
    rng = np.random.default_rng(3)
    sk = sample_skeleton(KOU_KILLED, math.inf, 0.05, rng)
    p = to_pssmp(sk, 1.5)
    text = path_to_csv(p)
    assert text.startswith("time,value,tag\n")
    t, v, l, g = path_from_csv(text)
    assert np.array_equal(t, p.times) and np.array_equal(v, p.values)
    assert np.array_equal(l, p.left) and np.array_equal(g, p.tags)


def test_csv_writes_inf_literal():
    sk = skeleton([0.0, 1.0], [0.0, -math.inf])
    text = path_to_csv(sk)
    assert "-inf" in text and "e+308" not in text
