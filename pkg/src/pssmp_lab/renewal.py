"""Cramér-type tail constants by three routes.

For an unkilled Lévy process ``sigma`` with ``lambda = psi(vartheta) > 0``
and an independent ``T ~ Exp(lambda)``,

    P(sigma_T >= x) ~ C exp(-vartheta x),   C = lambda / (vartheta mu),

where ``mu = psi'(vartheta)`` is the mean of the tilted one-step law
``L(dy) = exp(vartheta y - lambda) P(sigma_1 in dy)``.  A pole computation
on ``E exp(u sigma_T) = lambda / (lambda - psi(u))`` gives the same residue.
The constant is computed in closed form, from a lattice solution of the
tilted renewal equation, and from plain Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.signal import fftconvolve
from scipy.special import ndtr

from .errors import DomainError, Infeasible, InvalidParam, NoConvergence, NotApplicable
from .levy_model import (
    CramerMode,
    LevyModel,
    StopRule,
    cramer_root,
    cumulant,
    cumulant_derivative,
    default_rise_level,
    sample_increments,
    sample_skeleton,
)
from .stats_verify import bootstrap_ci
from .streams import StreamFamily, map_replicas

FEASIBLE_HITS = 100


@dataclass(frozen=True)
class RenewalSetup:
    sigma_model: LevyModel
    vartheta: float
    lambda_rate: float
    mu_natural: float

    @property
    def mu_stated(self):
        """``E(sigma_1 exp(vartheta sigma_1))``, larger than ``mu_natural``
        by the factor ``exp(lambda)``."""
        return self.mu_natural * math.exp(self.lambda_rate)


def renewal_setup(model: LevyModel, vartheta: float) -> RenewalSetup:
    if not vartheta > 0:
        raise InvalidParam("vartheta must be positive")
    m = model.without_killing()
    lam = cumulant(m, vartheta)
    mu = cumulant_derivative(m, vartheta, 1)
    if not lam > 0:
        raise DomainError(f"psi(vartheta) = {lam:.3g} must be positive")
    if not mu > 0:
        raise DomainError("tilted mean must be positive")
    return RenewalSetup(m, float(vartheta), lam, mu)


def cramer_constant(setup: RenewalSetup) -> float:
    """``lambda / (vartheta psi'(vartheta))``."""
    return setup.lambda_rate / (setup.vartheta * setup.mu_natural)


def cramer_constant_stated(setup: RenewalSetup) -> float:
    """Variant using ``E(sigma_1 exp(vartheta sigma_1))`` as the mean."""
    return setup.lambda_rate / (setup.vartheta * setup.mu_stated)


def _tail_chunk(rng, setup, x_grid, size):
    t = rng.exponential(1.0 / setup.lambda_rate, size)
    s = sample_increments(setup.sigma_model, t, rng)
    return np.array([np.count_nonzero(s >= x) for x in x_grid], dtype=np.int64)


def check_tail_feasible(vartheta, x_max, n):
    """Rare-event guard ``n exp(-vartheta x_max) >= 100``."""
    return n * math.exp(-vartheta * x_max) >= FEASIBLE_HITS


def mc_exp_tail(setup: RenewalSetup, x_grid, n: int, streams: StreamFamily,
                chunk: int = 1 << 20):
    """Rows ``(x, exp(vartheta x) P_hat(sigma_T >= x), stderr)``."""
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x_grid) <= 0):
        raise InvalidParam("x_grid must be increasing")
    if not check_tail_feasible(setup.vartheta, x_grid[-1], n):
        raise Infeasible(
            f"n exp(-vartheta x_max) = {n * math.exp(-setup.vartheta * x_grid[-1]):.3g} < "
            f"{FEASIBLE_HITS}; raise n or use a tilted sampler")
    n_chunks = -(-n // chunk)
    sizes = [min(chunk, n - i * chunk) for i in range(n_chunks)]
    counts = np.zeros(len(x_grid), dtype=np.int64)
    for i, size in enumerate(sizes):
        counts += _tail_chunk(streams.generator(i), setup, x_grid, size)
    p = counts / n
    scale = np.exp(setup.vartheta * x_grid)
    se = np.sqrt(p * (1 - p) / n) * scale
    return [dict(x=float(x), value=float(v), stderr=float(e), hits=int(c))
            for x, v, e, c in zip(x_grid, p * scale, se, counts)]


# ---------------------------------------------------------------------------
# lattice renewal solver (Brownian or deterministic sigma)


def _z_values(setup: RenewalSetup, x):
    """``z(x) = int_0^1 lambda e^{-lambda t} P(sigma_t >= x) dt``."""
    m, lam = setup.sigma_model, setup.lambda_rate
    b, s = m.drift, m.sigma
    if s == 0:
        if b <= 0:
            raise NotApplicable("deterministic sigma needs positive drift")
        u = np.clip(x / b, 0.0, 1.0)
        return np.exp(-lam * u) - math.exp(-lam)

    def f(t):
        if t == 0:
            return lam * (x <= 0).astype(float)
        return lam * math.exp(-lam * t) * ndtr((b * t - x) / (s * math.sqrt(t)))

    val, _ = quad_vec(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=2000,
                      points=(1e-6, 1e-4, 1e-2))
    return val


def _step_weights(setup: RenewalSetup, h):
    """Lattice weights of the tilted step law ``N(b + s^2 vartheta, s^2)``."""
    m = setup.sigma_model
    mean = m.drift + m.sigma ** 2 * setup.vartheta
    s = m.sigma
    if s == 0:
        j = mean / h
        if abs(j - round(j)) > 1e-9:
            raise InvalidParam("deterministic step must be a lattice multiple")
        return np.array([1.0]), int(round(j))
    lo = math.floor((mean - 8 * s) / h)
    hi = math.ceil((mean + 8 * s) / h)
    j = np.arange(lo, hi + 1)
    w = ndtr((j * h + h / 2 - mean) / s) - ndtr((j * h - h / 2 - mean) / s)
    return w / w.sum(), lo


@dataclass
class LatticeSolution:
    x: np.ndarray
    Z: np.ndarray
    z: np.ndarray
    plateau: float
    z_integral: float
    iterations: int
    h: float


def renewal_lattice_solve(setup: RenewalSetup, h: float | None = None,
                          right: float | None = None, left: float | None = None,
                          tol: float = 1e-13, max_iter: int = 100_000) -> LatticeSolution:
    """Fixed-point iteration ``Z = z + L * Z`` for the tilted renewal equation.

    ``Z`` vanishes left of the lattice and is extended by its last value on
    the right.  The plateau is the mean of ``Z`` over ``[x_max - 15 mu,
    x_max - 5 mu]``.
    """
    m = setup.sigma_model
    if m.has_jumps:
        raise NotApplicable("lattice solver supports Brownian or deterministic sigma only")
    mu, th = setup.mu_natural, setup.vartheta
    h = mu / 50 if h is None else h
    right = 60 * mu if right is None else right
    left = -(30 / th + 8 * m.sigma + 2 * mu) if left is None else left
    if right < 40 * mu:
        raise InvalidParam("lattice must cover at least 40 mean steps")
    k0 = math.floor(left / h)
    k1 = math.ceil(right / h)
    x = np.arange(k0, k1 + 1) * h
    zn = np.exp(th * x) * _z_values(setup, x)
    w, j0 = _step_weights(setup, h)
    K = len(x)
    pad = len(w) + abs(j0) + 1
    Z = np.zeros(K)
    for it in range(1, max_iter + 1):
        # Z(x_k - y_j) for y_j = (j0 + i) h; beyond the right end use Z[-1]
        ext = np.concatenate((np.zeros(pad), Z, np.full(pad, Z[-1])))
        conv = fftconvolve(ext, w, mode="full")
        # conv[n] = sum_i w_i ext[n - i]; we need ext index (pad + k) - j0 - i
        idx = pad + np.arange(K) - j0
        new = zn + conv[idx]
        change = float(np.max(np.abs(new - Z)))
        Z = new
        if change < tol * max(1.0, float(np.max(np.abs(Z)))):
            break
    else:
        raise NoConvergence(f"no convergence after {max_iter} iterations")
    win = (x >= x[-1] - 15 * mu) & (x <= x[-1] - 5 * mu)
    plateau = float(np.mean(Z[win]))
    z_int = float(np.trapezoid(zn, x))
    return LatticeSolution(x, Z, zn, plateau, z_int, it, h)


# ---------------------------------------------------------------------------
# constants for the killed process and the overall minimum


def terminal_tail_constant(model: LevyModel, gamma: float | None = None) -> float:
    """``d_q = q / (gamma psi'(gamma))`` at the negative root of ``psi = q``.

    This is :func:`cramer_constant` for ``sigma = -xi``, ``vartheta = -gamma``
    and ``lambda = q``.
    """
    if gamma is None:
        gamma = cramer_root(model, CramerMode.CONTINUOUS_ABSORPTION)
    return model.killing_rate / (gamma * cumulant_derivative(model, gamma, 1))


def terminal_tail_constant_stated(model: LevyModel, gamma: float | None = None) -> float:
    """Variant with ``E(xi_1 exp(gamma xi_1))``; smaller by ``exp(-q)``."""
    return terminal_tail_constant(model, gamma) * math.exp(-model.killing_rate)


def _terminal_chunk(rng, model, size):
    e = rng.exponential(1.0 / model.killing_rate, size)
    return sample_increments(model.without_killing(), e, rng)


def sample_terminal_log(model: LevyModel, n: int, streams: StreamFamily, chunk: int = 1 << 20):
    """Exact draws of ``xi_e`` with ``e ~ Exp(q)``: ``X_{T0-} = x exp(xi_e)``."""
    if model.killing_rate <= 0:
        raise NotApplicable("needs a positive killing rate")
    parts = []
    for i in range(-(-n // chunk)):
        parts.append(_terminal_chunk(streams.generator(i), model, min(chunk, n - i * chunk)))
    return np.concatenate(parts)


def terminal_tail_ladder(xi_e, x, gamma, eps_ladder, min_hits: int = 1000):
    """Rows ``(eps, eps^gamma P_hat_x(X_{T0-} <= eps), stderr, hits, feasible)``."""
    n = len(xi_e)
    s = np.sort(xi_e)
    rows = []
    for eps in eps_ladder:
        k = int(np.searchsorted(s, math.log(eps / x), side="right"))
        p = k / n
        scale = eps ** gamma
        rows.append(dict(eps=float(eps), value=p * scale,
                         stderr=math.sqrt(p * (1 - p) / n) * scale, hits=k,
                         feasible=k >= min_hits))
    return rows


def _min_sample(rng, model, grid_step, rise):
    sk = sample_skeleton(model, math.inf, grid_step, rng, bridge_min=True,
                         stop_rule=StopRule(rise_above_min=rise))
    return float(min(np.min(sk.bridge_min[1:]), np.min(sk.left), np.min(sk.values)))


def sample_levy_minimum(model: LevyModel, n: int, streams: StreamFamily,
                        grid_step: float = 0.5, rise: float | None = None, workers: int = 1):
    """Exact draws of ``I^xi`` for a model drifting to +infinity.

    Bridge minima make the law exact for any ``grid_step``; only the stop
    level ``rise`` truncates (error at most ``exp(-gamma rise)`` per path).
    """
    rise = default_rise_level(model) if rise is None else rise
    return np.asarray(map_replicas(_min_sample, n, streams, (model, grid_step, rise), workers))


def min_tail_constant(model: LevyModel, gamma: float, t_grid, minima,
                      bootstrap: int = 0, rng: np.random.Generator | None = None):
    """Rows ``(t, exp(gamma t) P_hat(I^xi < -t), stderr)`` from a minimum sample.

    With ``bootstrap > 0`` the last row carries a 95% percentile interval.
    """
    minima = np.asarray(minima)
    n = len(minima)
    t_grid = np.asarray(t_grid, dtype=float)
    if n * math.exp(-gamma * t_grid[-1]) < FEASIBLE_HITS:
        raise Infeasible("too few paths for the largest t")
    rows = []
    for t in t_grid:
        p = float(np.mean(minima < -t))
        scale = math.exp(gamma * t)
        rows.append(dict(t=float(t), value=p * scale,
                         stderr=math.sqrt(p * (1 - p) / n) * scale))
    if bootstrap:
        t = t_grid[-1]
        lo, hi = bootstrap_ci(lambda s: np.mean(s < -t) * math.exp(gamma * t), minima,
                              bootstrap, 0.95, rng)
        rows[-1].update(ci_lo=lo, ci_hi=hi)
    return rows
