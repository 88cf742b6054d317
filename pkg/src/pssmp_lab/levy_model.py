"""Finite-activity Lévy models: cumulant calculus, Cramér roots, Esscher tilts
and exact skeleton sampling.

A model is ``xi_t = b t + sigma W_t + sum of compound-Poisson jumps``, killed
at an independent Exponential(q) time.  Cumulants exclude killing:

    psi(theta) = b theta + sigma^2 theta^2 / 2 + lambda (M_J(theta) - 1)
"""

from __future__ import annotations

import collections
import enum
import functools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernel
from .errors import DomainError, InvalidParam, NegativeKilling, NoRoot, NotApplicable

KILL_TOL = 1e-10

TAG_ORIGIN = _kernel.TAG_ORIGIN
TAG_GRID = _kernel.TAG_GRID
TAG_JUMP = _kernel.TAG_JUMP
TAG_KILL = _kernel.TAG_KILL
TAG_NAMES = {TAG_ORIGIN: "origin", TAG_GRID: "grid", TAG_JUMP: "jump", TAG_KILL: "kill"}

_REASONS = {
    _kernel.REASON_HORIZON: "horizon",
    _kernel.REASON_KILL: "kill",
    _kernel.REASON_RISE: "rise",
    _kernel.REASON_FALL: "fall",
    _kernel.REASON_TARGET: "target",
}


# ---------------------------------------------------------------------------
# jump laws


@dataclass(frozen=True)
class NoJumps:
    """Placeholder law for models without a compound-Poisson part."""

    def domain(self):
        return -math.inf, math.inf

    def mgf(self, theta, order=0):
        return 1.0 if order == 0 else 0.0

    def tilt(self, theta):
        return self

    @property
    def has_positive(self):
        return False

    @property
    def has_negative(self):
        return False

    def kernel_params(self):
        return _kernel.JUMP_NONE, 0.0, 0.0, 0.0

    def sample(self, rng, size):
        return np.zeros(size)

    def sum_of(self, rng, counts):
        return np.zeros(np.shape(counts))


@dataclass(frozen=True)
class TwoSidedExponential:
    """Double-exponential (Kou) jumps.

    Parameters
    ----------
    p : float
        Probability that a jump is upward.
    eta_plus, eta_minus : float
        Rates of the upward and downward exponential sizes.
    """

    p: float
    eta_plus: float
    eta_minus: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParam(f"p must lie in [0, 1], got {self.p}")
        if not (self.eta_plus > 0 and self.eta_minus > 0):
            raise InvalidParam("exponential rates must be strictly positive")

    def domain(self):
        lo = -math.inf if self.p == 1.0 else -self.eta_minus
        hi = math.inf if self.p == 0.0 else self.eta_plus
        return lo, hi

    def _terms(self, theta, order):
        k = math.factorial(order)
        up = dn = 0.0
        if self.p > 0:
            up = self.p * k * self.eta_plus / (self.eta_plus - theta) ** (order + 1)
        if self.p < 1:
            dn = (1 - self.p) * k * self.eta_minus / (self.eta_minus + theta) ** (order + 1)
            dn *= (-1) ** order
        return up, dn

    def mgf(self, theta, order=0):
        up, dn = self._terms(theta, order)
        return up + dn

    def tilt(self, theta):
        up, dn = self._terms(theta, 0)
        m = up + dn
        ep = self.eta_plus - theta if self.p > 0 else self.eta_plus
        em = self.eta_minus + theta if self.p < 1 else self.eta_minus
        return TwoSidedExponential(p=min(max(up / m, 0.0), 1.0), eta_plus=ep, eta_minus=em)

    @property
    def has_positive(self):
        return self.p > 0

    @property
    def has_negative(self):
        return self.p < 1

    def kernel_params(self):
        return _kernel.JUMP_TWO_SIDED, float(self.p), float(self.eta_plus), float(self.eta_minus)

    def sample(self, rng, size):
        up = rng.random(size) < self.p
        return np.where(up, rng.exponential(1 / self.eta_plus, size),
                        -rng.exponential(1 / self.eta_minus, size))

    def sum_of(self, rng, counts):
        counts = np.asarray(counts)
        n_up = rng.binomial(counts, self.p)
        # a sum of k iid Exp(eta) is Gamma(k, 1/eta); shape 0 gives 0
        return (rng.gamma(n_up, 1 / self.eta_plus)
                - rng.gamma(counts - n_up, 1 / self.eta_minus))


@dataclass(frozen=True)
class GaussianJump:
    """Normally distributed jump sizes (Merton)."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise InvalidParam("GaussianJump sd must be strictly positive")

    def domain(self):
        return -math.inf, math.inf

    def mgf(self, theta, order=0):
        m = math.exp(self.mean * theta + 0.5 * self.sd ** 2 * theta ** 2)
        g = self.mean + self.sd ** 2 * theta
        if order == 0:
            return m
        if order == 1:
            return g * m
        return (g * g + self.sd ** 2) * m

    def tilt(self, theta):
        return GaussianJump(self.mean + self.sd ** 2 * theta, self.sd)

    @property
    def has_positive(self):
        return True

    @property
    def has_negative(self):
        return True

    def kernel_params(self):
        return _kernel.JUMP_GAUSSIAN, float(self.mean), float(self.sd), 0.0

    def sample(self, rng, size):
        return self.mean + self.sd * rng.standard_normal(size)

    def sum_of(self, rng, counts):
        counts = np.asarray(counts)
        return self.mean * counts + self.sd * np.sqrt(counts) * rng.standard_normal(counts.shape)


@dataclass(frozen=True)
class ConstantJump:
    """Every jump has the same size ``c``."""

    c: float

    def __post_init__(self):
        if self.c == 0:
            raise InvalidParam("ConstantJump size must be nonzero")

    def domain(self):
        return -math.inf, math.inf

    def mgf(self, theta, order=0):
        return self.c ** order * math.exp(self.c * theta)

    def tilt(self, theta):
        return self

    @property
    def has_positive(self):
        return self.c > 0

    @property
    def has_negative(self):
        return self.c < 0

    def kernel_params(self):
        return _kernel.JUMP_CONSTANT, float(self.c), 0.0, 0.0

    def sample(self, rng, size):
        return np.full(size, float(self.c))

    def sum_of(self, rng, counts):
        return self.c * np.asarray(counts, dtype=float)


JumpLaw = NoJumps | TwoSidedExponential | GaussianJump | ConstantJump


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class LevyModel:
    """Parametric finite-activity Lévy process with optional killing."""

    drift: float = 0.0
    sigma: float = 0.0
    jump_intensity: float = 0.0
    jump_law: JumpLaw = field(default_factory=NoJumps)
    killing_rate: float = 0.0

    def __post_init__(self):
        if self.sigma < 0 or self.jump_intensity < 0 or self.killing_rate < 0:
            raise InvalidParam("sigma, jump_intensity and killing_rate must be >= 0")
        if self.jump_intensity > 0 and isinstance(self.jump_law, NoJumps):
            raise InvalidParam("positive jump intensity requires a jump law")
        for name in ("drift", "sigma", "jump_intensity", "killing_rate"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParam(f"{name} must be finite")

    @property
    def has_jumps(self):
        return self.jump_intensity > 0

    @property
    def has_positive_jumps(self):
        return self.has_jumps and self.jump_law.has_positive

    @property
    def has_negative_jumps(self):
        return self.has_jumps and self.jump_law.has_negative

    def is_subordinator(self):
        """True when paths are almost surely nondecreasing."""
        return self.sigma == 0 and self.drift >= 0 and not self.has_negative_jumps

    def domain(self):
        """Open interval on which the cumulant is finite."""
        if not self.has_jumps:
            return -math.inf, math.inf
        return self.jump_law.domain()

    def without_killing(self):
        return replace(self, killing_rate=0.0)


def _check_domain(model, theta):
    lo, hi = model.domain()
    if not lo < theta < hi:
        raise DomainError(f"theta={theta} outside the mgf domain ({lo}, {hi})")


def cumulant(model: LevyModel, theta: float) -> float:
    """Laplace exponent ``psi(theta) = log E exp(theta xi_1)`` of the unkilled part."""
    theta = float(theta)
    _check_domain(model, theta)
    out = model.drift * theta + 0.5 * model.sigma ** 2 * theta ** 2
    if model.has_jumps:
        out += model.jump_intensity * (model.jump_law.mgf(theta) - 1.0)
    return out


def cumulant_derivative(model: LevyModel, theta: float, order: int = 1) -> float:
    """First or second derivative of :func:`cumulant` in closed form."""
    if order not in (1, 2):
        raise InvalidParam("order must be 1 or 2")
    theta = float(theta)
    _check_domain(model, theta)
    if order == 1:
        out = model.drift + model.sigma ** 2 * theta
    else:
        out = model.sigma ** 2
    if model.has_jumps:
        out += model.jump_intensity * model.jump_law.mgf(theta, order)
    return out


class CramerMode(enum.Enum):
    HIT_ZERO = "HitZero"
    CONTINUOUS_ABSORPTION = "ContinuousAbsorption"

    # spellings used in configs
    HitZero = "HitZero"
    ContinuousAbsorption = "ContinuousAbsorption"


def _negative_side_root(model, target):
    """Solve ``psi(-u) = target`` for u > 0, given psi(0) - target <= 0 and
    psi decreasing to the left of 0 initially.

    Since ``g(u) = psi(-u) - target`` is convex with g(0) <= 0, the set
    ``{g <= 0}`` is an interval [0, root].
    """
    lo_dom = model.domain()[0]
    u_max = -lo_dom

    def g(u):
        return cumulant(model, -u) - target

    hi = 1.0
    if hi >= u_max:
        hi = 0.5 * u_max
    k = 1
    while g(hi) <= 0:
        if math.isinf(u_max):
            hi *= 2.0
            if hi > 1e12:
                raise NoRoot("cumulant stays below target on the admissible domain")
        else:
            k += 1
            if k > 60:
                raise NoRoot("cumulant stays below target up to the domain boundary")
            hi = u_max * (1.0 - 2.0 ** -k)
    lo = 0.0
    for _ in range(400):
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    for _ in range(2):
        d = -cumulant_derivative(model, -u, 1)
        if d == 0:
            break
        cand = u - g(u) / d
        if 0 < cand < u_max and abs(g(cand)) <= abs(g(u)):
            u = cand
    return u


def cramer_root(model: LevyModel, mode) -> float:
    """Cramér-type root of the cumulant.

    ``HitZero``: gamma > 0 with ``psi(-gamma) = 0`` (needs psi'(0) > 0).
    ``ContinuousAbsorption``: gamma < 0 with ``psi(gamma) = q`` (needs q > 0).
    """
    mode = CramerMode(mode)
    if mode is CramerMode.HIT_ZERO:
        if cumulant_derivative(model, 0.0, 1) <= 0:
            raise NotApplicable("HitZero root requires drift to +infinity (psi'(0) > 0)")
        return _negative_side_root(model, 0.0)
    if model.killing_rate <= 0:
        raise NotApplicable("ContinuousAbsorption root requires a positive killing rate")
    return -_negative_side_root(model, model.killing_rate)


def esscher_tilt(model: LevyModel, theta: float) -> LevyModel:
    """Model of xi under the measure with density ``exp(theta xi_t - psi(theta) t)``
    on the unkilled part, with residual killing ``q - psi(theta)``."""
    theta = float(theta)
    psi = cumulant(model, theta)
    kill = model.killing_rate - psi
    if kill < -KILL_TOL:
        raise NegativeKilling(f"tilted killing rate {kill:.3g} is negative")
    if abs(kill) <= KILL_TOL:
        kill = 0.0
    if theta == 0:
        return model
    if model.has_jumps:
        law = model.jump_law.tilt(theta)
        lam = model.jump_intensity * model.jump_law.mgf(theta)
    else:
        law, lam = model.jump_law, 0.0
    return LevyModel(
        drift=model.drift + model.sigma ** 2 * theta,
        sigma=model.sigma,
        jump_intensity=lam,
        jump_law=law,
        killing_rate=kill,
    )


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class StopRule:
    """Optional early termination criteria, checked after every record.

    Parameters
    ----------
    rise_above_min : float, optional
        Stop once ``xi >= running_min + K``.
    fall_below_max : float, optional
        Stop once ``xi <= running_max - K``.
    a_target : float, optional
        Stop once ``int_0^s exp(xi_u / a_alpha) du >= a_target``.
    require_all : bool
        Stop only when every configured criterion has fired (each latches).
    """

    rise_above_min: Optional[float] = None
    fall_below_max: Optional[float] = None
    a_target: Optional[float] = None
    a_alpha: float = 1.0
    require_all: bool = False

    def kernel_args(self):
        inf = math.inf
        return (
            inf if self.rise_above_min is None else float(self.rise_above_min),
            inf if self.fall_below_max is None else float(self.fall_below_max),
            float(self.a_alpha),
            inf if self.a_target is None else float(self.a_target),
            bool(self.require_all),
        )


@functools.lru_cache(maxsize=256)
def default_rise_level(model: LevyModel, tol: float = math.exp(-40.0)) -> float:
    """Rise level K beyond which a new overall minimum is negligible.

    The probability of ever returning below the running minimum after a
    rise of K is ``exp(-gamma K)``, so ``K = log(1/tol) / gamma`` (with a
    floor for steep models).
    """
    L = -math.log(tol)
    try:
        g = cramer_root(model.without_killing(), CramerMode.HIT_ZERO)
        return max(L / g, L / 2)
    except (NotApplicable, NoRoot):
        return L / 2 * (1 + abs(model.drift)) / max(model.sigma, 1.0)


def default_stop_rule(model: LevyModel) -> StopRule:
    return StopRule(rise_above_min=default_rise_level(model))


@dataclass
class SkeletonPath:
    """Lévy path recorded at grid points, jump epochs and the kill epoch.

    ``values[i]`` is xi at ``times[i]`` (post-jump) and ``left[i]`` its left
    limit; the two differ only at jump records.  ``bridge_min[i]`` is the
    minimum over ``(times[i-1], times[i])`` of the continuous part, or the
    smaller endpoint when bridge sampling is off.  A kill record carries the
    pre-kill value in both arrays.
    """

    times: np.ndarray
    values: np.ndarray
    left: np.ndarray
    tags: np.ndarray
    bridge_min: np.ndarray
    zeta: float = math.inf
    killed: bool = False
    censored: bool = False
    stop_reason: str = "horizon"
    grid_step: float = math.nan
    model: Optional[LevyModel] = None

    def __len__(self):
        return len(self.times)

    @property
    def jump_count(self):
        return int(np.count_nonzero(self.tags == TAG_JUMP))

    def records(self):
        """Iterate ``(time, value, tag_name)`` triples."""
        for t, v, g in zip(self.times, self.values, self.tags):
            yield float(t), float(v), TAG_NAMES[int(g)]

    def value_at(self, t):
        """Linear interpolant of the continuous part (right-continuous at jumps)."""
        t = np.asarray(t, dtype=float)
        j = np.clip(np.searchsorted(self.times, t, side="right"), 1, len(self.times) - 1)
        t0, t1 = self.times[j - 1], self.times[j]
        v0, v1 = self.values[j - 1], self.left[j]
        f = np.where(t1 > t0, (t - t0) / np.where(t1 > t0, t1 - t0, 1.0), 1.0)
        out = v0 + f * (v1 - v0)
        return np.where(t >= t1, self.values[j], out)


# Recent path lengths, used only to size output buffers (never affects values).
_recent_lengths = collections.deque(maxlen=32)


def _capacity_hint(horizon, grid_step, lam):
    if math.isfinite(horizon):
        full = horizon / grid_step + lam * horizon * 1.2 + 64
    else:
        full = math.inf
    guess = 1.2 * max(_recent_lengths) if _recent_lengths else 4096
    return int(max(64, min(full, guess, 1 << 24)))


def sample_skeleton(
    model: LevyModel,
    horizon: float,
    grid_step: float,
    rng: np.random.Generator,
    bridge_min: bool = False,
    stop_rule: Optional[StopRule] = None,
) -> SkeletonPath:
    """Sample an exact skeleton of ``model`` up to ``min(horizon, zeta)`` or
    until ``stop_rule`` fires.

    Jump epochs, jump sizes, the kill epoch and Gaussian increments between
    records are all exact; only the record set is a grid.
    """
    if not horizon > 0 or not grid_step > 0 or not math.isfinite(grid_step):
        raise InvalidParam("horizon and grid_step must be positive")
    rule = stop_rule or StopRule()
    rise_k, fall_k, a_alpha, a_target, require_all = rule.kernel_args()
    if math.isinf(horizon) and model.killing_rate == 0 and math.isinf(rise_k) \
            and math.isinf(fall_k) and math.isinf(a_target):
        raise InvalidParam("infinite horizon needs killing or a stop rule")
    code, p0, p1, p2 = model.jump_law.kernel_params()
    cap = _capacity_hint(horizon, grid_step, model.jump_intensity)
    t, v, lv, g, bm, reason, zeta = _kernel.simulate(
        rng, float(model.drift), float(model.sigma), float(model.jump_intensity),
        code, p0, p1, p2, float(model.killing_rate), float(horizon), float(grid_step),
        bool(bridge_min), rise_k, fall_k, a_alpha, a_target, require_all, cap,
    )
    _recent_lengths.append(len(t))
    reason = _REASONS[reason]
    return SkeletonPath(
        times=t, values=v, left=lv, tags=g, bridge_min=bm,
        zeta=float(zeta), killed=reason == "kill", censored=reason == "horizon",
        stop_reason=reason, grid_step=float(grid_step), model=model,
    )


def sample_increments(model: LevyModel, t, rng: np.random.Generator) -> np.ndarray:
    """Exact draws of the unkilled ``xi_t`` for an array of independent times."""
    t = np.asarray(t, dtype=float)
    out = model.drift * t + model.sigma * np.sqrt(t) * rng.standard_normal(t.shape)
    if model.has_jumps:
        counts = rng.poisson(model.jump_intensity * t)
        out = out + model.jump_law.sum_of(rng, counts)
    return out
