import math

import numpy as np
import pytest

from pssmp_lab import CramerMode, LevyModel, StreamFamily, cramer_root
from pssmp_lab import renewal as rn
from pssmp_lab.errors import DomainError, Infeasible, InvalidParam, NotApplicable

from conftest import BM, KOU_KILLED, KOU_LC3

S = StreamFamily(77, "tests/renewal")
DET = LevyModel(1.0, 0.0)
BM1 = LevyModel(1.0, 1.0)


def test_deterministic_closed_form_is_one():
    for th in (0.3, 1.0, 2.5):
        s = rn.renewal_setup(DET, th)
        assert s.lambda_rate == th
        assert abs(rn.cramer_constant(s) - 1.0) <= 1e-12
        # the mean E(sigma_1 e^{vartheta sigma_1}) variant is refuted by this case
        assert rn.cramer_constant_stated(s) == pytest.approx(math.exp(-th), rel=1e-12)


def test_brownian_fixture_arithmetic():
    s = rn.renewal_setup(BM1, 1.0)
    assert s.lambda_rate == 1.5 and s.mu_natural == 2.0
    assert rn.cramer_constant(s) == 0.75


def test_setup_errors():
    with pytest.raises(DomainError):
        rn.renewal_setup(KOU_LC3, 3.5)
    with pytest.raises(InvalidParam):
        rn.renewal_setup(BM1, 0.0)
    with pytest.raises(DomainError):
        rn.renewal_setup(LevyModel(-1.0, 1.0), 1.0)  # psi(1) < 0


def test_mc_deterministic_rows_are_one():
    s = rn.renewal_setup(DET, 1.0)
    rows = rn.mc_exp_tail(s, [0.0, 1.0, 2.0, 3.0], 10 ** 6, S.child("det"))
    assert rows[0]["value"] == 1.0 and rows[0]["stderr"] == 0.0
    for r in rows[1:]:
        assert abs(r["value"] - 1.0) <= 3 * r["stderr"]


def test_mc_brownian_near_constant():
    s = rn.renewal_setup(BM1, 1.0)
    rows = rn.mc_exp_tail(s, [4.0, 6.0], 4 * 10 ** 6, S.child("bm"))
    for r in rows:
        assert abs(r["value"] - 0.75) <= 3 * r["stderr"] + 0.01


def test_mc_guard():
    s = rn.renewal_setup(BM1, 1.0)
    assert not rn.check_tail_feasible(1.0, 20.0, 10 ** 6)
    with pytest.raises(Infeasible):
        rn.mc_exp_tail(s, [20.0], 10 ** 6, S)
    with pytest.raises(InvalidParam):
        rn.mc_exp_tail(s, [2.0, 1.0], 10 ** 6, S)


def test_mc_chunking_is_invisible_in_distribution():
    s = rn.renewal_setup(BM1, 1.0)
    a = rn.mc_exp_tail(s, [1.0], 3 * 10 ** 5, S.child("c"), chunk=10 ** 5)
    b = rn.mc_exp_tail(s, [1.0], 3 * 10 ** 5, S.child("c"), chunk=10 ** 5)
    assert a == b


def test_lattice_brownian():
    s = rn.renewal_setup(BM1, 1.0)
    sol = rn.renewal_lattice_solve(s)
    assert abs(sol.z_integral - 1.5) / 1.5 < 1e-4
    assert abs(sol.plateau - 0.75) / 0.75 < 0.01
    half = rn.renewal_lattice_solve(s, h=sol.h / 2)
    assert abs(half.plateau - sol.plateau) / sol.plateau < 0.003


def test_lattice_deterministic():
    s = rn.renewal_setup(DET, 1.0)
    sol = rn.renewal_lattice_solve(s)
    assert abs(sol.plateau - 1.0) < 1e-6
    assert abs(sol.z_integral - 1.0) < 1e-4


def test_lattice_rejects_jumps_and_short_lattice():
    with pytest.raises(NotApplicable):
        rn.renewal_lattice_solve(rn.renewal_setup(KOU_LC3, 1.0))
    with pytest.raises(InvalidParam):
        rn.renewal_lattice_solve(rn.renewal_setup(BM1, 1.0), right=10.0)


def test_dq_kou_fixture():
    g = cramer_root(KOU_KILLED, CramerMode.CONTINUOUS_ABSORPTION)
    dq = rn.terminal_tail_constant(KOU_KILLED, g)
    assert dq == pytest.approx(0.20194, abs=5e-5)
    assert rn.terminal_tail_constant_stated(KOU_KILLED) == pytest.approx(dq * math.exp(-0.2))


def test_dq_positive_for_large_killing():
    m = LevyModel(0.5, 1.0, 1.0, KOU_KILLED.jump_law, 25.0)
    dq = rn.terminal_tail_constant(m)
    assert 0 < dq < math.inf


def test_dq_matches_monte_carlo_and_rejects_stated_variant():
    g = cramer_root(KOU_KILLED, CramerMode.CONTINUOUS_ABSORPTION)
    xi = rn.sample_terminal_log(KOU_KILLED, 2 * 10 ** 6, S.child("dq"))
    rows = rn.terminal_tail_ladder(xi, 1.0, g, [2.0 ** -k for k in range(1, 12)])
    r = [r for r in rows if r["feasible"]][-1]
    dq = rn.terminal_tail_constant(KOU_KILLED, g)
    dq_stated = rn.terminal_tail_constant_stated(KOU_KILLED, g)
    assert abs(r["value"] - dq) / dq < 0.10
    assert abs(r["value"] - dq_stated) / dq_stated > 0.10


def test_terminal_ladder_scaling_in_x():
    g = cramer_root(KOU_KILLED, CramerMode.CONTINUOUS_ABSORPTION)
    xi = rn.sample_terminal_log(KOU_KILLED, 10 ** 6, S.child("scale"))
    r1 = rn.terminal_tail_ladder(xi, 1.0, g, [2.0 ** -8])[0]
    r2 = rn.terminal_tail_ladder(xi, 2.0, g, [2.0 ** -7])[0]
    # X_{T0-} = x e^{xi_e}: the same sample, rescaled, gives exactly the factor
    assert r2["value"] / r1["value"] == pytest.approx(2.0 ** g, rel=1e-12)


def test_min_tail_bm_is_flat_one():
    mins = rn.sample_levy_minimum(BM, 20000, S.child("bm_min"))
    rows = rn.min_tail_constant(BM, 1.0, [0.0, 0.5, 1.0, 2.0], mins)
    assert rows[0]["value"] == 1.0
    for r in rows[1:]:
        assert abs(r["value"] - 1.0) <= 3 * r["stderr"]


def test_min_tail_kou_plateau_with_bootstrap():
    g = cramer_root(KOU_LC3, CramerMode.HIT_ZERO)
    mins = rn.sample_levy_minimum(KOU_LC3, 5000, S.child("kou_min"))
    rows = rn.min_tail_constant(KOU_LC3, g, [1.0, 2.0, 3.0], mins, bootstrap=200,
                                rng=np.random.default_rng(0))
    last = rows[-1]
    assert 0 < last["ci_lo"] <= last["value"] <= last["ci_hi"] < math.inf


def test_min_tail_guard():
    with pytest.raises(Infeasible):
        rn.min_tail_constant(BM, 1.0, [10.0], np.full(1000, -20.0))
