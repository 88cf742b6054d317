"""Conditioned processes as Esscher-tilted models, and importance-weighted
estimators that make the corresponding h-transform identities checkable.

Two constructions are provided.

* Conditioning to hit 0 (``hit_zero``): for q = 0, drift to +infinity and
  ``psi(-gamma) <= 0``, tilt by ``-gamma`` and kill at ``kappa = -psi(-gamma)``.
  The pssMp excessive function is ``h(x) = x^{-gamma}``.
* Conditioning to hit 0 continuously (``continuous``): for q > 0 take the
  negative root of ``psi(gamma) = q`` and tilt by ``gamma``; the result has no
  killing and negative mean, with ``h(x) = x^{gamma}``.

In both cases, writing ``h(x) = x^e``,

    P^h_x(F, t < T0) = E_x[1_F h(X_t) / h(x), t < T0].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidTilt, NotApplicable
from .lamperti import LampertiClass, PssmpPath, classify, sample_pssmp, to_pssmp
from .levy_model import (
    KILL_TOL,
    CramerMode,
    LevyModel,
    StopRule,
    cramer_root,
    cumulant,
    cumulant_derivative,
    default_rise_level,
    esscher_tilt,
    sample_skeleton,
)
from .path_decomposition import _last_argmin
from .stats_verify import wilson_interval
from .streams import StreamFamily, map_replicas


@dataclass(frozen=True)
class ConditionedModel:
    gamma: float
    base: LevyModel
    tilted: LevyModel
    kappa: float
    tilted_mean: float
    convention: str  # "hit_zero" or "continuous"

    @property
    def h_exponent(self):
        """Exponent ``e`` of the pssMp h-function ``h(x) = x^e``."""
        return -self.gamma if self.convention == "hit_zero" else self.gamma

    def h(self, x):
        return np.asarray(x, dtype=float) ** self.h_exponent


def conditioned_to_hit_zero(model: LevyModel, gamma: float) -> ConditionedModel:
    """Law of the pssMp conditioned to hit 0, as a tilted Lévy model."""
    if model.killing_rate != 0:
        raise NotApplicable("conditioning to hit zero needs an unkilled model")
    if cumulant_derivative(model, 0.0, 1) <= 0:
        raise NotApplicable("conditioning to hit zero needs drift to +infinity")
    if not gamma > 0:
        raise InvalidTilt("gamma must be positive")
    psi = cumulant(model, -gamma)
    if psi > KILL_TOL:
        raise InvalidTilt(f"E exp(-gamma xi_1) = exp({psi:.3g}) exceeds 1")
    kappa = 0.0 if abs(psi) <= KILL_TOL else -psi
    tilted = esscher_tilt(model, -gamma)
    return ConditionedModel(
        gamma=float(gamma), base=model, tilted=tilted, kappa=kappa,
        tilted_mean=cumulant_derivative(model, -gamma, 1), convention="hit_zero",
    )


def conditioned_continuous(model: LevyModel) -> ConditionedModel:
    """Law of the killed pssMp conditioned to hit 0 continuously."""
    gamma = cramer_root(model, CramerMode.CONTINUOUS_ABSORPTION)
    mean = cumulant_derivative(model, gamma, 1)
    if not mean < 0:
        raise InvalidTilt(f"tilted mean {mean:.3g} is not negative")
    tilted = esscher_tilt(model, gamma)
    return ConditionedModel(
        gamma=gamma, base=model, tilted=tilted, kappa=0.0, tilted_mean=mean,
        convention="continuous",
    )


# ---------------------------------------------------------------------------
# path events; module-level classes so that they pickle for worker processes


@dataclass(frozen=True)
class Always:
    def __call__(self, p: PssmpPath, t: float) -> bool:
        return True


@dataclass(frozen=True)
class ValueAbove:
    c: float

    def __call__(self, p, t):
        return p.value_at(t) > self.c


@dataclass(frozen=True)
class MaxAbove:
    """``sup_{s <= t} X_s > c`` (record resolution)."""

    c: float

    def __call__(self, p, t):
        k = np.searchsorted(p.times, t, side="right")
        hi = max(np.max(p.values[:k]), np.max(p.left[:k]), p.value_at(t))
        return hi > self.c


@dataclass(frozen=True)
class AllOf:
    events: tuple

    def __call__(self, p, t):
        return all(e(p, t) for e in self.events)


def parse_event(text: str):
    """Parse ``always``, ``value>c``, ``max>c`` or ``&``-joined combinations."""
    parts = [s.strip() for s in text.split("&")]
    evs = []
    for s in parts:
        if s == "always":
            evs.append(Always())
        elif s.startswith("value>"):
            evs.append(ValueAbove(float(s[6:])))
        elif s.startswith("max>"):
            evs.append(MaxAbove(float(s[4:])))
        else:
            raise ValueError(f"unknown event {s!r}")
    return evs[0] if len(evs) == 1 else AllOf(tuple(evs))


# ---------------------------------------------------------------------------
# estimators


@dataclass
class Estimate:
    value: float
    stderr: float
    n: int

    def __iter__(self):
        return iter((self.value, self.stderr))


def mean_se(x) -> Estimate:
    x = np.asarray(x, dtype=float)
    n = len(x)
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return Estimate(float(math.fsum(x) / n), se, n)


def _cover_path(rng, model, x, t, grid_step, bridge_min=False, whole=False):
    """Sample a pssMp path covering ``[0, t]``; with ``whole`` it also runs
    past the overall minimum (drift to +inf) or until absorption."""
    cls = classify(model)
    if not whole or cls is LampertiClass.LC2:
        return sample_pssmp(model, x, t, grid_step, rng, bridge_min=bridge_min)[2]
    if cls is LampertiClass.LC1:
        sk = sample_skeleton(model, math.inf, grid_step, rng, bridge_min=bridge_min)
    else:
        rule = StopRule(rise_above_min=default_rise_level(model), a_target=t / x,
                        require_all=True)
        sk = sample_skeleton(model, math.inf, grid_step, rng, bridge_min=bridge_min,
                             stop_rule=rule)
    return to_pssmp(sk, x, 1.0)


def _pairs_sample(rng, model, x, pairs, grid_step, h_exp):
    """Per ``(t, event)`` pair, ``1_F (X_t/x)^h_exp 1{t < T0}`` on one path."""
    t_max = max(t for t, _ in pairs)
    p = _cover_path(rng, model, x, t_max, grid_step)
    out = np.zeros(len(pairs))
    for i, (t, ev) in enumerate(pairs):
        if t < p.T0 and ev(p, t):
            out[i] = 1.0 if h_exp == 0 else (p.value_at(t) / x) ** h_exp
    return out


def iw_estimate_many(cm: ConditionedModel, x: float, pairs, n: int, streams: StreamFamily,
                     grid_step: float = 1e-3, workers: int = 1):
    """:func:`iw_estimate` for several ``(t, event)`` pairs on shared paths."""
    pairs = list(pairs)
    d = np.asarray(map_replicas(_pairs_sample, n, streams.child("direct"),
                                (cm.tilted, x, pairs, grid_step, 0.0), workers))
    w = np.asarray(map_replicas(_pairs_sample, n, streams.child("weighted"),
                                (cm.base, x, pairs, grid_step, cm.h_exponent), workers))
    return [(mean_se(d[:, i]), mean_se(w[:, i])) for i in range(len(pairs))]


def iw_estimate(cm: ConditionedModel, x: float, t: float, event: Callable, n: int,
                streams: StreamFamily, grid_step: float = 1e-3, workers: int = 1):
    """Two independent estimates of ``P^h_x(F_t, t < T0)``.

    ``direct`` samples the tilted model; ``weighted`` samples the base model
    and reweights by ``h(X_t) / h(x)``.  Returns ``(direct, weighted)`` as
    :class:`Estimate` objects.
    """
    return iw_estimate_many(cm, x, [(t, event)], n, streams, grid_step, workers)[0]


def combined_z(a: Estimate, b: Estimate) -> float:
    s = math.hypot(a.stderr, b.stderr)
    return abs(a.value - b.value) / s if s > 0 else (0.0 if a.value == b.value else math.inf)


# --- supermedian check ------------------------------------------------------


def _min_sample(rng, model, grid_step, rise):
    sk = sample_skeleton(model, math.inf, grid_step, rng, bridge_min=True,
                         stop_rule=StopRule(rise_above_min=rise))
    return float(np.min(sk.bridge_min[1:])) if len(sk) > 1 else 0.0


def _terminal_sample(rng, model, x, t, grid_step):
    p = _cover_path(rng, model, x, t, grid_step)
    return float(p.value_at(t)) if t < p.T0 else 0.0


def _ratio_var(pa, pb, pab, m):
    """Delta-method variance of ``pa_hat / pb_hat`` from one sample of size m."""
    r = pa / pb
    v = pa * (1 - pa) + r * r * pb * (1 - pb) - 2 * r * (pab - pa * pb)
    return max(v, 0.0) / (m * pb * pb)


def supermedian_check(model: LevyModel, epsilon: float, t: float, x_grid: Sequence[float],
                      n: int, streams: StreamFamily, grid_step: float = 1e-2,
                      min_grid_step: float = 0.5, rise: float | None = None,
                      workers: int = 1):
    """Estimate ``h^eps(x) = P_x(I^X < eps) / P_1(I^X < eps)`` and ``P_t h^eps(x)``.

    A single sample of ``I^xi`` gives the empirical function
    ``G(u) = P(I^xi < u)``, shared by every term:
    ``h^eps(x) = G(log(eps/x)) / G(log eps)`` and
    ``P_t h^eps(x) = E_x[G(log(eps / X_t))] / G(log eps)`` with ``X_t``
    sampled independently.  The bridge minimum is exact on any grid, so
    the minimum sample uses the coarse ``min_grid_step``.

    Returns dict rows with keys ``x, pth, pth_se, h, h_se, z`` where ``z`` is
    ``(pth - h)`` in units of the combined stderr.
    """
    if classify(model) is not LampertiClass.LC3:
        raise NotApplicable("supermedian check needs a model drifting to +infinity")
    rise = rise if rise is not None else default_rise_level(model)
    mins = np.sort(np.asarray(map_replicas(
        _min_sample, n, streams.child("minimum"), (model, min_grid_step, rise), workers)))
    m = len(mins)

    def G(u):
        return np.searchsorted(mins, u, side="left") / m

    D = float(G(math.log(epsilon)))
    if D == 0:
        raise NotApplicable("no minimum sample below log(epsilon)")
    rows = []
    for i, x in enumerate(x_grid):
        num = float(G(math.log(epsilon / x)))
        h = num / D
        var_h = _ratio_var(num, D, min(num, D), m)
        if t > 0:
            xt = np.asarray(map_replicas(_terminal_sample, n, streams.child(f"x{i}"),
                                         (model, x, t, grid_step), workers))
            g = G(np.log(epsilon / xt))
            pth = float(np.mean(g)) / D
            var_p = float(np.var(g, ddof=1)) / len(g) / D ** 2 + pth ** 2 * (1 - D) / (D * m)
        else:
            pth, var_p = h, var_h
        se = math.sqrt(var_h + var_p)
        rows.append(dict(x=float(x), pth=pth, pth_se=math.sqrt(var_p), h=h,
                         h_se=math.sqrt(var_h), z=(pth - h) / se if se > 0 else 0.0))
    return rows


# --- conditioning trends ------------------------------------------------------


def _trend_sample(rng, model, x, t, grid_step, event, restrict_pre_min):
    """One base-model path: ``(I^X, X_{T0-}, F_t before m, F_t)``.

    ``F_t`` includes ``t < T0``.  ``X_{T0-}`` is ``inf`` unless the path is
    absorbed by a jump.  The pre-minimum flag further requires ``t < m``.
    """
    p = _cover_path(rng, model, x, t, grid_step, bridge_min=True, whole=True)
    f = bool(t < p.T0 and event(p, t))
    terminal = p.terminal_value if p.hit_by_jump else math.inf
    I, i, kind = _last_argmin(p.values, p.left, p.bridge_min, p.tags, True, True)
    f_pre = f
    if restrict_pre_min and f:
        f_pre = t < p.times[i - 1 if kind == 0 else i]
    return I, terminal, f_pre, f


def trend_sample(model: LevyModel, x: float, t: float, event: Callable, n: int,
                 streams: StreamFamily, grid_step: float = 1e-2, workers: int = 1):
    """Sample both conditioning statistics and the event from ``n`` paths.

    Returns ``(stat, f_pre, f)`` with ``stat = {"min": ..., "terminal": ...}``.
    ``f_pre`` equals ``f`` unless the model drifts to +infinity, in which
    case it is restricted to ``{t < m}``.
    """
    restrict = classify(model) is LampertiClass.LC3
    res = map_replicas(_trend_sample, n, streams,
                       (model, x, t, grid_step, event, restrict), workers)
    stat = {"min": np.array([r[0] for r in res]), "terminal": np.array([r[1] for r in res])}
    return stat, np.array([r[2] for r in res], dtype=bool), np.array([r[3] for r in res], dtype=bool)


def trend_rows(stat, f, epsilons: Sequence[float], flavor: str, target: tuple,
               min_hits: int = 200):
    """Conditional frequencies of ``f`` given ``stat < eps`` along a ladder.

    ``terminal_below`` uses ``stat <= eps``.  Rows are dicts with keys ``eps,
    estimate, stderr, n_accepted, wilson_lo, wilson_hi, flagged, target,
    target_stderr``; a row is flagged when fewer than ``min_hits`` paths are
    accepted.
    """
    if flavor not in ("min_below", "terminal_below"):
        raise ValueError(f"unknown flavor {flavor!r}")
    stat = np.asarray(stat)
    f = np.asarray(f, dtype=bool)
    rows = []
    for eps in epsilons:
        acc = stat <= eps if flavor == "terminal_below" else stat < eps
        k = int(np.count_nonzero(acc))
        hits = int(np.count_nonzero(acc & f))
        est = hits / k if k else math.nan
        se = math.sqrt(est * (1 - est) / k) if k else math.nan
        lo, hi = wilson_interval(hits, k)
        rows.append(dict(eps=float(eps), estimate=est, stderr=se, n_accepted=k,
                         wilson_lo=lo, wilson_hi=hi, flagged=k < min_hits,
                         target=float(target[0]), target_stderr=float(target[1])))
    return rows


def conditioning_trend(model: LevyModel, x: float, flavor: str, event: Callable, t: float,
                       epsilons: Sequence[float], n: int, streams: StreamFamily,
                       target: tuple, grid_step: float = 1e-2, min_hits: int = 200,
                       workers: int = 1):
    """Estimate ``P_x(F_t, t < T0 | S < eps)`` along a decreasing ladder.

    ``S`` is ``I^X`` (``min_below``) or ``X_{T0-}`` (``terminal_below``).  For
    drift-to-+infinity models ``F_t`` is further restricted to ``{t < m}``.
    ``target`` is a ``(value, stderr)`` pair attached to every row.
    """
    stat, f_pre, _ = trend_sample(model, x, t, event, n, streams, grid_step, workers)
    key = "min" if flavor == "min_below" else "terminal"
    return trend_rows(stat[key], f_pre, epsilons, flavor, target, min_hits)


def conditioned_target(cm: ConditionedModel, x: float, t: float, event: Callable, n: int,
                       streams: StreamFamily, grid_step: float = 1e-2, workers: int = 1):
    """Direct Monte Carlo of ``P^h_x(F_t, t < T0)`` under the tilted model."""
    d = map_replicas(_pairs_sample, n, streams, (cm.tilted, x, [(t, event)], grid_step, 0.0),
                     workers)
    return mean_se(np.asarray(d)[:, 0])


def trend_verdict(rows, last: int = 4, z: float = 3.0):
    """Trend criterion on unflagged rows.

    Passes when the final unflagged row is within ``z`` combined stderr of
    the target and ``|gap|`` does not grow by more than ``z`` stderr between
    consecutive rows among the last ``last`` unflagged rows.
    """
    ok_rows = [r for r in rows if not r["flagged"]]
    if not ok_rows:
        return False, "no unflagged rows"
    gaps = [r["estimate"] - r["target"] for r in ok_rows]
    ses = [math.hypot(r["stderr"], r["target_stderr"]) for r in ok_rows]
    final_ok = abs(gaps[-1]) <= z * ses[-1]
    tail = list(range(max(0, len(ok_rows) - last), len(ok_rows)))
    mono = all(abs(gaps[j + 1]) <= abs(gaps[j]) + z * math.hypot(ses[j], ses[j + 1])
               for j in tail[:-1])
    msg = f"final gap {gaps[-1]:.4g} (se {ses[-1]:.3g}); monotone={mono}"
    return bool(final_ok and mono), msg
