"""Splitting paths at the last time they attain their overall minimum.

Candidates for the minimum at record ``i`` are, in time order, the interior
bridge minimum of the interval ending at ``i``, the left limit ``left[i]`` and
the value ``values[i]``.  The last candidate within tolerance of the minimum
wins.  The returned ``argmin_last`` stays at record resolution: an interior
bridge minimum is reported at the start of its interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IdentityViolation, NotApplicable
from .lamperti import PssmpPath, TimeChange, _to_space, additive_functional
from .levy_model import TAG_KILL, SkeletonPath

REL_TOL = 1e-12
M_TOL = 1e-9

_BRIDGE, _LEFT, _VALUE = 0, 1, 2


@dataclass
class PathSegment:
    """Piece of a path; ``times`` are relative to absolute time ``origin``."""

    times: np.ndarray
    values: np.ndarray
    left: np.ndarray
    tags: np.ndarray
    origin: float = 0.0

    def __len__(self):
        return len(self.times)


@dataclass
class MinDecomposition:
    min_value: float
    argmin_last: float
    argmin_index: int
    pre: PathSegment
    post: PathSegment
    jump_at_min: float
    censored: bool
    where: str  # "value", "left" or "bridge"


def _last_argmin(values, left, bridge, tags, in_space, use_bridge):
    """Return ``(I, index, kind)``; ``in_space`` excludes pssMp kill values."""
    vals = values
    if in_space and len(tags) and tags[-1] == TAG_KILL:
        vals = values.copy()
        vals[-1] = math.inf
    cands = [left, vals]  # same order as the kind codes
    if use_bridge:
        b = bridge.copy()
        b[0] = math.inf
        cands.insert(0, b)
    I = min(float(np.min(c)) for c in cands)
    if in_space:
        # tolerance matches the Lévy one after the exponential map
        hit = lambda c: c <= I * (1.0 + REL_TOL * max(1.0, abs(math.log(I)) if I > 0 else 1.0))
    else:
        hit = lambda c: c <= I + REL_TOL * max(1.0, abs(I))
    best = (-1, -1)
    kinds = (_BRIDGE, _LEFT, _VALUE) if use_bridge else (_LEFT, _VALUE)
    for kind, c in zip(kinds, cands):
        idx = np.flatnonzero(hit(c))
        if len(idx):
            best = max(best, (int(idx[-1]), kind))
    return I, best[0], best[1]


def _split(times, values, left, tags, bridge, in_space, use_bridge, censored):
    I, i, kind = _last_argmin(values, left, bridge, tags, in_space, use_bridge)
    start = i - 1 if kind == _BRIDGE else i
    rho = float(times[start])
    jump = 0.0
    if kind != _BRIDGE:
        jump = float(values[i] - left[i])
        if in_space and tags[i] == TAG_KILL:
            jump = 0.0
    pre = PathSegment(times[:start].copy(), values[:start].copy(), left[:start].copy(),
                      tags[:start].copy(), 0.0)
    pt = times[start:] - rho
    pv = values[start:].copy()
    pl = left[start:].copy()
    if not in_space:
        pv -= I
        pl -= I
        if kind == _VALUE:
            pv[0] = 0.0
        pl[0] = pv[0] if kind != _LEFT else 0.0
    else:
        pl[0] = pv[0] if kind != _LEFT else I
    post = PathSegment(pt, pv, pl, tags[start:].copy(), rho)
    where = {_BRIDGE: "bridge", _LEFT: "left", _VALUE: "value"}[kind]
    return MinDecomposition(I, rho, start, pre, post, jump, bool(censored), where)


def min_split_levy(skeleton: SkeletonPath, use_bridge: bool = True) -> MinDecomposition:
    """Overall minimum ``I`` of xi, last attainment ``rho`` and the re-based
    post-minimum path ``xi_{rho+t} - I``."""
    return _split(skeleton.times, skeleton.values, skeleton.left, skeleton.tags,
                  skeleton.bridge_min, False, use_bridge, skeleton.censored)


def min_split_pssmp(p: PssmpPath, source: SkeletonPath, tc: TimeChange,
                    use_bridge: bool = True) -> MinDecomposition:
    """Minimum ``I^X``, its last time ``m`` and ``X_{m+t}``, cross-checked
    against the Lévy decomposition of ``source``.

    Raises
    ------
    IdentityViolation
        If ``I^X != x exp(I^xi)`` bit-for-bit or ``|m - x^{1/alpha} A_rho| > 1e-9``.
    """
    dec = _split(p.times, p.values, p.left, p.tags, p.bridge_min, True, use_bridge, p.censored)
    lev = min_split_levy(source, use_bridge)
    expect = float(_to_space(p.x0, lev.min_value))
    if dec.min_value != expect:
        raise IdentityViolation(
            f"I^X={dec.min_value!r} differs from x exp(I^xi)={expect!r}")
    m_expect = p.x0 ** (1.0 / p.alpha) * float(tc(lev.argmin_last))
    if abs(dec.argmin_last - m_expect) > M_TOL:
        raise IdentityViolation(
            f"m={dec.argmin_last!r} vs x^(1/alpha) A_rho={m_expect!r} "
            f"(indices {dec.argmin_index} / {lev.argmin_index})")
    return dec


def reconstruct_post(min_value: float, post_levy: PathSegment, alpha: float = 1.0,
                     origin: float = 0.0) -> PathSegment:
    """Lamperti map of the re-based post-minimum Lévy path started at
    ``min_value``; relative times, with ``origin`` carried through."""
    sk = SkeletonPath(
        times=post_levy.times, values=post_levy.values, left=post_levy.left,
        tags=post_levy.tags, bridge_min=np.zeros_like(post_levy.times),
    )
    tc = additive_functional(sk, alpha)
    times = min_value ** (1.0 / alpha) * tc.A
    values = _to_space(min_value, post_levy.values)
    left = _to_space(min_value, post_levy.left)
    if len(values) and post_levy.tags[-1] == TAG_KILL:
        values[-1] = 0.0
    return PathSegment(times, values, left, post_levy.tags.copy(), origin)


def max_relative_error(a: PathSegment, b: PathSegment) -> float:
    """Largest relative discrepancy of absolute times and values.

    Times are compared on the absolute clock ``origin + t`` so that the
    first record (relative time 0) does not divide by zero.
    """
    if len(a) != len(b):
        return math.inf
    ta, tb = a.origin + a.times, b.origin + b.times
    et = np.abs(ta - tb) / np.maximum(np.abs(tb), 1e-300)
    et[(ta == tb)] = 0.0
    denom = np.maximum(np.abs(b.values), 1e-300)
    ev = np.abs(a.values - b.values) / denom
    ev[(a.values == b.values)] = 0.0
    return float(max(et.max(initial=0.0), ev.max(initial=0.0)))


def last_passage(p: PssmpPath, y: float) -> Optional[float]:
    """``sup{t : X_t = y}`` for paths without positive jumps.

    Returns ``inf`` when the path ends at or below ``y`` (the last crossing
    cannot be certified) and ``None`` when ``y`` is never reached.
    """
    if p.model is not None and p.model.has_positive_jumps:
        raise NotApplicable("last passage needs a model without positive jumps")
    alive_end = p.values[-1] if not math.isfinite(p.T0) else 0.0
    if alive_end <= y:
        return math.inf
    a = 1.0 / p.alpha
    r1 = p.values[:-1] ** a
    r2 = p.left[1:] ** a
    ry = y ** a
    cross = (r1 - ry) * (r2 - ry) <= 0
    idx = np.flatnonzero(cross)
    if len(idx) == 0:
        return 0.0 if p.values[0] == y else None
    j = int(idx[-1])
    t0, t1 = p.times[j], p.times[j + 1]
    if r2[j] == r1[j]:
        return float(t1)
    f = (ry - r1[j]) / (r2[j] - r1[j])
    return float(t0 + min(max(f, 0.0), 1.0) * (t1 - t0))
