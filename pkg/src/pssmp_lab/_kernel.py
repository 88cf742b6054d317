"""Compiled inner loop for exact skeleton sampling.

Kept separate from :mod:`levy_model` so the Python-facing module stays readable.
All arguments are plain floats/ints so a single compiled signature serves every
model.
"""

import math

import numpy as np
from numba import njit

TAG_ORIGIN, TAG_GRID, TAG_JUMP, TAG_KILL = 0, 1, 2, 3

JUMP_NONE, JUMP_TWO_SIDED, JUMP_GAUSSIAN, JUMP_CONSTANT = 0, 1, 2, 3

REASON_HORIZON, REASON_KILL, REASON_RISE, REASON_FALL, REASON_TARGET = 0, 1, 2, 3, 4

# Bridge minima are skipped when the interval stays this many local standard
# deviations (squared) above the running minimum: P(miss) <= exp(-2 * 40).
BRIDGE_SKIP_Z2 = 40.0


@njit(cache=True, error_model="numpy")
def _draw_jump(rng, code, p0, p1, p2):
    if code == JUMP_TWO_SIDED:
        if rng.random() < p0:
            return rng.exponential(1.0 / p1)
        return -rng.exponential(1.0 / p2)
    if code == JUMP_GAUSSIAN:
        return p0 + p1 * rng.standard_normal()
    if code == JUMP_CONSTANT:
        return p0
    return 0.0


@njit(cache=True, error_model="numpy")
def _segment_integral(v1, v2, h, alpha):
    d = (v2 - v1) / alpha
    if abs(d) < 1e-8:
        r = 1.0 + 0.5 * d
    else:
        r = math.expm1(d) / d
    return h * math.exp(v1 / alpha) * r


# state vector layout for the resumable fill loop
_T, _V, _RUNMIN, _RUNMAX, _AREA, _K, _NEXT_JUMP, _KILL, _END = range(9)
_FIRED_RISE, _FIRED_FALL, _FIRED_TARGET, _REASON, _DONE = range(9, 14)


@njit(cache=True, error_model="numpy")
def _fill(rng, st, n, times, values, left, tags, bmin, b, sigma, lam, jcode,
          jp0, jp1, jp2, horizon, dt, bridge, rise_k, fall_k, a_alpha, a_target,
          require_all):
    """Advance the path until it ends or the buffers are full; returns n."""
    cap = times.shape[0]
    t = st[_T]
    v = st[_V]
    runmin = st[_RUNMIN]
    runmax = st[_RUNMAX]
    area = st[_AREA]
    k = int(st[_K])
    next_jump = st[_NEXT_JUMP]
    kill_time = st[_KILL]
    end = st[_END]
    fired_rise = st[_FIRED_RISE] > 0
    fired_fall = st[_FIRED_FALL] > 0
    fired_target = st[_FIRED_TARGET] > 0
    use_rise = rise_k < math.inf
    use_fall = fall_k < math.inf
    use_target = a_target < math.inf
    n_rules = int(use_rise) + int(use_fall) + int(use_target)
    s2 = sigma * sigma
    end_guard = end * (1.0 - 1e-13)
    reason = REASON_HORIZON
    done = False

    while n < cap:
        tg = k * dt
        if tg >= end_guard:
            tg = end
        tn = tg
        tag = TAG_GRID
        if next_jump < tn:
            tn = next_jump
            tag = TAG_JUMP
        elif tg == kill_time:
            tag = TAG_KILL
        h = tn - t
        lv = v + b * h
        if sigma > 0.0:
            lv += sigma * math.sqrt(h) * rng.standard_normal()
        lo = v if v < lv else lv
        bm = lo
        if bridge and sigma > 0.0:
            if lo <= runmin or (lo - runmin) ** 2 < BRIDGE_SKIP_Z2 * s2 * h:
                u = rng.random()
                bm = 0.5 * (v + lv - math.sqrt((lv - v) ** 2 - 2.0 * s2 * h * math.log(u)))
        nv = lv
        if tag == TAG_JUMP:
            nv = lv + _draw_jump(rng, jcode, jp0, jp1, jp2)
            next_jump = tn + rng.exponential(1.0 / lam)
        else:
            k += 1
        if use_target:
            area += _segment_integral(v, lv, h, a_alpha)

        times[n] = tn
        values[n] = nv
        left[n] = lv
        tags[n] = np.int8(tag)
        bmin[n] = bm
        n += 1
        t = tn
        v = nv
        # bm <= lv by construction; only a downward jump can take nv lower
        if bm < runmin:
            runmin = bm
        if nv < runmin:
            runmin = nv
        if lv > runmax:
            runmax = lv
        if nv > runmax:
            runmax = nv

        if tag == TAG_KILL:
            reason = REASON_KILL
            done = True
            break
        if n_rules > 0:
            if use_rise and not fired_rise and nv - runmin >= rise_k:
                fired_rise = True
            if use_fall and not fired_fall and nv <= runmax - fall_k:
                fired_fall = True
            if use_target and not fired_target and area >= a_target:
                fired_target = True
            nf = int(fired_rise) + int(fired_fall) + int(fired_target)
            if (require_all and nf == n_rules) or (not require_all and nf > 0):
                if fired_fall:
                    reason = REASON_FALL
                elif fired_rise:
                    reason = REASON_RISE
                else:
                    reason = REASON_TARGET
                done = True
                break
        if tn >= end:
            done = True
            break

    st[_T] = t
    st[_V] = v
    st[_RUNMIN] = runmin
    st[_RUNMAX] = runmax
    st[_AREA] = area
    st[_K] = k
    st[_NEXT_JUMP] = next_jump
    st[_FIRED_RISE] = fired_rise
    st[_FIRED_FALL] = fired_fall
    st[_FIRED_TARGET] = fired_target
    st[_REASON] = reason
    st[_DONE] = done
    return n


@njit(cache=True, error_model="numpy")
def _grown(arr, n):
    out = np.empty(2 * arr.shape[0], arr.dtype)
    out[:n] = arr[:n]
    return out


@njit(cache=True, error_model="numpy")
def simulate(rng, b, sigma, lam, jcode, jp0, jp1, jp2, q, horizon, dt,
             bridge, rise_k, fall_k, a_alpha, a_target, require_all, capacity):
    """Sample one skeleton; returns (times, values, left, tags, bmin, reason, zeta)."""
    times = np.empty(capacity)
    values = np.empty(capacity)
    left = np.empty(capacity)
    tags = np.empty(capacity, np.int8)
    bmin = np.empty(capacity)

    st = np.zeros(14)
    st[_KILL] = math.inf
    if q > 0.0:
        st[_KILL] = rng.exponential(1.0 / q)
    st[_END] = min(horizon, st[_KILL])
    st[_NEXT_JUMP] = math.inf
    if lam > 0.0:
        st[_NEXT_JUMP] = rng.exponential(1.0 / lam)
    st[_K] = 1.0

    times[0] = 0.0
    values[0] = 0.0
    left[0] = 0.0
    tags[0] = TAG_ORIGIN
    bmin[0] = 0.0
    n = 1
    while True:
        n = _fill(rng, st, n, times, values, left, tags, bmin, b, sigma, lam,
                  jcode, jp0, jp1, jp2, horizon, dt, bridge, rise_k, fall_k,
                  a_alpha, a_target, require_all)
        if st[_DONE] > 0:
            break
        times = _grown(times, n)
        values = _grown(values, n)
        left = _grown(left, n)
        tags = _grown(tags, n)
        bmin = _grown(bmin, n)

    reason = int(st[_REASON])
    zeta = math.inf
    if reason == REASON_KILL:
        zeta = st[_KILL]
    return (times[:n].copy(), values[:n].copy(), left[:n].copy(), tags[:n].copy(),
            bmin[:n].copy(), reason, zeta)
