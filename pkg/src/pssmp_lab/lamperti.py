"""Lamperti transform between Lévy skeletons and positive self-similar paths.

Given a skeleton of xi and a start x > 0,

    A_s = int_0^s exp(xi_u / alpha) du,     tau = A^{-1},
    X_t = x exp(xi_{tau(t x^{-1/alpha})}).

Between records xi is linearly interpolated, so A has a closed form on every
segment and tau is inverted analytically.  A convenient consequence is that
``X^{1/alpha}`` is linear in pssMp time on each segment.
"""

from __future__ import annotations

import csv
import enum
import io
import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParam, NotAbsorbed
from .levy_model import (
    TAG_JUMP,
    TAG_KILL,
    TAG_NAMES,
    LevyModel,
    SkeletonPath,
    StopRule,
    cumulant_derivative,
    default_rise_level,
    sample_skeleton,
)


def _expm1_ratio(d):
    """``expm1(d) / d`` with the removable singularity at 0 filled in."""
    d = np.asarray(d, dtype=float)
    small = np.abs(d) < 1e-8
    safe = np.where(small, 1.0, d)
    return np.where(small, 1.0 + 0.5 * d, np.expm1(safe) / safe)


def _to_space(x, v):
    """Map Lévy values to pssMp values; shared so identities hold bit-for-bit."""
    return x * np.exp(v)


@dataclass
class TimeChange:
    """Additive functional ``A`` evaluated at the skeleton records.

    Segment ``j`` runs from record ``j`` to ``j + 1`` with start value
    ``xi_start[j]`` and end value ``xi_end[j]`` (left limit at record j+1).
    """

    s: np.ndarray
    A: np.ndarray
    xi_start: np.ndarray
    xi_end: np.ndarray
    alpha: float = 1.0
    A_total: float = math.inf
    lower_bound: bool = False

    @property
    def slopes(self):
        ds = np.diff(self.s)
        return (self.xi_end - self.xi_start) / np.where(ds > 0, ds, 1.0)

    @property
    def segments(self):
        """List of ``(s_start, xi_start, slope, A_start)`` tuples."""
        return list(zip(self.s[:-1], self.xi_start, self.slopes, self.A[:-1]))

    def __call__(self, s):
        """``A`` at arbitrary Lévy times (inside the recorded range)."""
        s = np.asarray(s, dtype=float)
        j = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        h = s - self.s[j]
        k = self.slopes[j]
        return self.A[j] + h * np.exp(self.xi_start[j] / self.alpha) * _expm1_ratio(k * h / self.alpha)


def additive_functional(skeleton: SkeletonPath, alpha: float = 1.0) -> TimeChange:
    """Closed-form ``A`` at every record of ``skeleton``."""
    if not alpha > 0:
        raise InvalidParam("alpha must be positive")
    s = skeleton.times
    v1 = skeleton.values[:-1]
    v2 = skeleton.left[1:]
    ds = np.diff(s)
    inc = ds * np.exp(v1 / alpha) * _expm1_ratio((v2 - v1) / alpha)
    A = np.concatenate(([0.0], np.cumsum(inc)))
    return TimeChange(
        s=s, A=A, xi_start=v1, xi_end=v2, alpha=float(alpha),
        A_total=float(A[-1]), lower_bound=bool(skeleton.censored),
    )


def invert_time(tc: TimeChange, t):
    """``tau(t) = inf{s : A_s > t}``; ``inf`` at or beyond ``A_total``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidParam("time must be nonnegative")
    j = np.clip(np.searchsorted(tc.A, t, side="right") - 1, 0, len(tc.A) - 2)
    a = t - tc.A[j]
    k = tc.slopes[j]
    w = a * np.exp(-tc.xi_start[j] / tc.alpha)
    z = k * w / tc.alpha
    # u = (alpha / k) log1p(k w / alpha), with the k -> 0 limit u = w
    small = np.abs(z) < 1e-12
    safe_z = np.where(small, 1.0, z)
    ratio = np.where(small, 1.0 - 0.5 * z, np.log1p(safe_z) / safe_z)
    u = w * ratio
    out = np.where(t >= tc.A_total, math.inf, tc.s[j] + u)
    return float(out) if out.ndim == 0 else out


class LampertiClass(enum.Enum):
    LC1 = "LC1"  # killed: hits 0 by a jump
    LC2 = "LC2"  # drifts to -inf: hits 0 continuously
    LC3 = "LC3"  # never hits 0


def classify(model: LevyModel) -> LampertiClass:
    if model.killing_rate > 0:
        return LampertiClass.LC1
    if cumulant_derivative(model, 0.0, 1) < 0:
        return LampertiClass.LC2
    return LampertiClass.LC3


@dataclass
class PssmpPath:
    """Time-changed positive path.

    ``values`` are post-jump values and ``left`` left limits.  If the source
    was killed the final record sits at ``T0`` with value 0 and left limit
    ``terminal_value``.  ``bridge_min`` holds per-interval minima, mapped from
    the Lévy bridge minima.
    """

    x0: float
    alpha: float
    times: np.ndarray
    values: np.ndarray
    left: np.ndarray
    tags: np.ndarray
    bridge_min: np.ndarray
    T0: float = math.inf
    terminal_value: float = 0.0
    hit_by_jump: bool = False
    censored: bool = False
    model: Optional[LevyModel] = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def records(self):
        for t, v, g in zip(self.times, self.values, self.tags):
            yield float(t), float(v), TAG_NAMES[int(g)]

    def value_at(self, t):
        """``X_t`` at arbitrary times; 0 from ``T0`` on.

        Raises ``InvalidParam`` past the recorded range of a live path.
        """
        if np.ndim(t) == 0:
            return self._value_scalar(float(t))
        t = np.asarray(t, dtype=float)
        if np.any((t > self.times[-1]) & ~(t >= self.T0)):
            raise InvalidParam("time beyond the recorded range")
        n = len(self.times)
        j = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, max(n - 2, 0))
        if n == 1:
            return np.where(t >= self.T0, 0.0, self.values[0] + 0 * t)
        t0, t1 = self.times[j], self.times[j + 1]
        r1 = self.values[j] ** (1 / self.alpha)
        r2 = self.left[j + 1] ** (1 / self.alpha)
        span = np.where(t1 > t0, t1 - t0, 1.0)
        f = np.clip((t - t0) / span, 0.0, 1.0)
        out = (r1 + (r2 - r1) * f) ** self.alpha
        out = np.where(t >= t1, self.values[j + 1], out)
        out = np.where(t >= self.T0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def _value_scalar(self, t):
        if t >= self.T0:
            return 0.0
        times = self.times
        n = len(times)
        if t > times[-1]:
            raise InvalidParam("time beyond the recorded range")
        if n == 1:
            return float(self.values[0])
        j = min(max(bisect.bisect_right(times, t) - 1, 0), n - 2)
        t0, t1 = times[j], times[j + 1]
        if t >= t1:
            return float(self.values[j + 1])
        a = self.alpha
        r1 = self.values[j] ** (1 / a)
        r2 = self.left[j + 1] ** (1 / a)
        f = min(max((t - t0) / (t1 - t0), 0.0), 1.0) if t1 > t0 else 0.0
        return float((r1 + (r2 - r1) * f) ** a)


def to_pssmp(skeleton: SkeletonPath, x: float, alpha: float = 1.0,
             tc: Optional[TimeChange] = None) -> PssmpPath:
    """Lamperti image of ``skeleton`` started at ``x``."""
    if not x > 0:
        raise InvalidParam("start value must be positive")
    tc = tc if tc is not None else additive_functional(skeleton, alpha)
    scale = x ** (1.0 / alpha)
    times = scale * tc.A
    values = _to_space(x, skeleton.values)
    left = _to_space(x, skeleton.left)
    bmin = _to_space(x, skeleton.bridge_min)
    T0 = math.inf
    terminal = 0.0
    if skeleton.killed:
        T0 = float(times[-1])
        terminal = float(left[-1])
        values[-1] = 0.0
    elif skeleton.stop_reason == "fall":
        # certified drift to -inf: the remaining area is negligible
        T0 = float(times[-1])
    return PssmpPath(
        x0=float(x), alpha=float(alpha), times=times, values=values, left=left,
        tags=skeleton.tags, bridge_min=bmin, T0=T0, terminal_value=terminal,
        hit_by_jump=bool(skeleton.killed), censored=bool(skeleton.censored),
        model=skeleton.model,
    )


def from_pssmp(p: PssmpPath) -> SkeletonPath:
    """Invert :func:`to_pssmp` using ``ds = X^{-1/alpha} dt`` segment-wise."""
    alpha = p.alpha
    vals = p.values.copy()
    killed = p.hit_by_jump and math.isfinite(p.T0)
    if killed:
        vals[-1] = p.left[-1]
    xi = np.log(vals / p.x0)
    xi_left = np.log(p.left / p.x0)
    v1, v2 = xi[:-1], xi_left[1:]
    dt = np.diff(p.times)
    scale = p.x0 ** (1.0 / alpha)
    ds = dt / (scale * np.exp(v1 / alpha) * _expm1_ratio((v2 - v1) / alpha))
    s = np.concatenate(([0.0], np.cumsum(ds)))
    if p.censored:
        reason = "horizon"
    elif killed:
        reason = "kill"
    elif math.isfinite(p.T0):
        reason = "fall"
    else:
        reason = "stop"
    return SkeletonPath(
        times=s, values=xi, left=xi_left, tags=p.tags,
        bridge_min=np.log(p.bridge_min / p.x0),
        zeta=float(s[-1]) if killed else math.inf,
        killed=killed, censored=p.censored, stop_reason=reason, model=p.model,
    )


def absorption_stats(p: PssmpPath):
    """``(T0, X_{T0-}, hit_by_jump)`` for an absorbed path."""
    if not math.isfinite(p.T0):
        raise NotAbsorbed("path is not absorbed at 0")
    return p.T0, p.terminal_value, p.hit_by_jump


# Return probability accepted when a fall certifies absorption; far below
# Monte Carlo resolution at any replica count used here.
FALL_TOL = 1e-9


def pssmp_stop_rule(model: LevyModel, x: float, t_max: float, alpha: float = 1.0,
                    fall: Optional[float] = None) -> StopRule:
    """Stop once pssMp time ``t_max`` is reached; LC2 models also stop on a
    fall of ``fall`` below the running maximum (certified absorption)."""
    target = t_max * x ** (-1.0 / alpha) if math.isfinite(t_max) else None
    fall_k = None
    if classify(model) is LampertiClass.LC2:
        fall_k = fall if fall is not None else default_rise_level(_reflect(model), FALL_TOL)
    return StopRule(a_target=target, a_alpha=alpha, fall_below_max=fall_k)


def _reflect(model: LevyModel) -> LevyModel:
    """Model of ``-xi`` (used only to pick a fall level)."""
    from .levy_model import ConstantJump, GaussianJump, TwoSidedExponential

    law = model.jump_law
    if isinstance(law, TwoSidedExponential):
        law = TwoSidedExponential(1 - law.p, law.eta_minus, law.eta_plus)
    elif isinstance(law, GaussianJump):
        law = GaussianJump(-law.mean, law.sd)
    elif isinstance(law, ConstantJump):
        law = ConstantJump(-law.c)
    return LevyModel(-model.drift, model.sigma, model.jump_intensity, law, 0.0)


def sample_pssmp(model: LevyModel, x: float, t_max: float, grid_step: float,
                 rng: np.random.Generator, alpha: float = 1.0, bridge_min: bool = False,
                 horizon: float = math.inf):
    """Sample ``(skeleton, time_change, pssmp_path)`` covering pssMp time
    ``[0, t_max]`` (or until absorption)."""
    rule = pssmp_stop_rule(model, x, t_max, alpha)
    sk = sample_skeleton(model, horizon, grid_step, rng, bridge_min=bridge_min, stop_rule=rule)
    tc = additive_functional(sk, alpha)
    return sk, tc, to_pssmp(sk, x, alpha, tc)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(v)


def path_to_csv(p: PssmpPath | SkeletonPath, fh=None) -> str:
    """Write ``time,value,tag`` rows.

    Jump and kill records are preceded by a same-time row tagged ``left``
    holding the left limit, so the file determines the path completely.
    """
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "value", "tag"])
    for i in range(len(p.times)):
        tag = int(p.tags[i])
        if tag in (TAG_JUMP, TAG_KILL):
            w.writerow([_fmt(p.times[i]), _fmt(p.left[i]), "left"])
        w.writerow([_fmt(p.times[i]), _fmt(p.values[i]), TAG_NAMES[tag]])
    return buf.getvalue() if fh is None else ""


def path_from_csv(text: str):
    """Parse :func:`path_to_csv` output into ``(times, values, left, tags)``."""
    codes = {name: code for code, name in TAG_NAMES.items()}
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["time", "value", "tag"]:
        raise InvalidParam("missing time,value,tag header")
    times, values, left, tags = [], [], [], []
    pending = None
    for t, v, g in rows[1:]:
        if g == "left":
            pending = float(v)
            continue
        times.append(float(t))
        values.append(float(v))
        left.append(pending if pending is not None else float(v))
        tags.append(codes[g])
        pending = None
    return np.array(times), np.array(values), np.array(left), np.array(tags, dtype=np.int8)
