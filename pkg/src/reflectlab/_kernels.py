"""Compiled per-path kernels.

Model parameters travel as a float64 array ``par = [drift, sigma, lam_up,
alpha, lam_down, beta]``; an absent jump side has rate 0.  Every path owns
the random stream ``(seed, index)`` and consumes it in a fixed order: for
each jump event the waiting time, then the side (only when both sides are
present), then the size.  Diffusion increments are drawn at each grid
point in time order.

Output rows of the functional kernels are ``[y_t, z, m, tau, straddle]``
with NaN for absent values.
"""

import math

import numpy as np
from numba import njit

from .rng import STATE_SIZE, exponential, normal, rng_init, uniform

NAN = math.nan
OUT_COLS = 5


@njit(cache=True, nogil=True, inline="always")
def _jump(state, lam_up, alpha, lam_down, beta):
    """Signed jump size for one jump event."""
    if lam_down == 0.0:
        return exponential(state, alpha)
    if lam_up == 0.0:
        return -exponential(state, beta)
    if uniform(state) * (lam_up + lam_down) < lam_up:
        return exponential(state, alpha)
    return -exponential(state, beta)


@njit(cache=True, nogil=True)
def conditioned_overshoot(state, tpar, gamma, level):
    """Overshoot of one excursion of Y from 0 conditioned to exceed ``level``.

    Proposals are excursions under the Cramér-tilted law ``tpar``; an
    excursion ending above ``level`` with overshoot ``k`` is accepted with
    probability ``exp(-gamma * k)``, which turns the tilted law of the
    overshoot back into the original conditional law.
    """
    d = tpar[0]
    lam_up, alpha, lam_down, beta = tpar[2], tpar[3], tpar[4], tpar[5]
    total = lam_up + lam_down
    while True:
        if d > 0.0:
            y = 0.0
        else:
            # the excursion starts with an up jump out of 0
            y = exponential(state, alpha)
            if y > level:
                k = y - level
                if uniform(state) < math.exp(-gamma * k):
                    return k
                continue
        while True:
            dt = exponential(state, total)
            y1 = y + d * dt
            if d > 0.0 and y1 > level:
                return 0.0
            if d < 0.0 and y1 <= 0.0:
                break
            y = y1
            y += _jump(state, lam_up, alpha, lam_down, beta)
            if y > level:
                k = y - level
                if uniform(state) < math.exp(-gamma * k):
                    return k
                break
            if y <= 0.0:
                break


@njit(cache=True, nogil=True)
def exact_path(par, t, x, level, horizon, regen, tpar, gamma, state, out):
    """Event-driven path of Y for a model without diffusion.

    Runs until Y(t) and the running maximum on [0, t] are known, the
    straddle indicator for level ``x`` is resolved and the passage over
    ``level`` is either observed or ruled out by the horizon.  With
    ``regen`` the first zero of Y after the horizon starts a fresh cycle and
    the overshoot is drawn from the conditioned-excursion law instead.
    """
    d = par[0]
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    s = 0.0
    y = 0.0
    ymax = 0.0
    past_t = False
    y_t = 0.0
    tau_x = -1.0
    zero_after_x = False
    strad_done = False
    strad = False
    l_done = False
    tau_l = NAN
    z = NAN

    while True:
        end = s + exponential(state, total)
        p0 = s
        while True:
            split = (not past_t) and end >= t
            p1 = t if split else end
            y1 = y + d * (p1 - p0)
            # zero of Y inside [p0, p1]
            if y1 <= 0.0 or y == 0.0:
                zt = p0 + y / -d if (d < 0.0 and y > 0.0) else p0
                y1 = max(y1, 0.0)
                zero_end = zt if d > 0.0 else p1
                if tau_x >= 0.0 and not past_t:
                    zero_after_x = True
                if past_t and not strad_done and tau_x < 0.0:
                    strad_done = True
                if regen and not l_done and zero_end >= horizon:
                    z = conditioned_overshoot(state, tpar, gamma, level)
                    l_done = True
            # creeping passage (positive drift only)
            if d > 0.0:
                if tau_x < 0.0 and y <= x < y1:
                    tau_x = p0 + (x - y) / d
                    if past_t and not strad_done:
                        strad = True
                        strad_done = True
                if not l_done and y <= level < y1:
                    tc = p0 + (level - y) / d
                    if regen or tc <= horizon:
                        tau_l = tc
                        z = 0.0
                        l_done = True
            if not past_t and y1 > ymax:
                ymax = y1
            y = y1
            p0 = p1
            if split:
                past_t = True
                y_t = y
                if not strad_done:
                    if tau_x >= 0.0:
                        strad = not zero_after_x
                        strad_done = True
                    elif y == 0.0:
                        strad_done = True
            else:
                break
        s = end
        if not regen and not l_done and s >= horizon:
            l_done = True
        if past_t and strad_done and l_done:
            break

        jump = _jump(state, lam_up, alpha, lam_down, beta)
        if jump > 0.0:
            y1 = y + jump
            if tau_x < 0.0 and y <= x < y1:
                tau_x = s
                if past_t and not strad_done:
                    strad = True
                    strad_done = True
            if not l_done and y <= level < y1:
                tau_l = s
                z = y1 - level
                l_done = True
            if not past_t and y1 > ymax:
                ymax = y1
            y = y1
        else:
            y1 = y + jump
            if y1 <= 0.0:
                y1 = 0.0
                if tau_x >= 0.0 and not past_t:
                    zero_after_x = True
                if past_t and not strad_done and tau_x < 0.0:
                    strad_done = True
                if regen and not l_done and s >= horizon:
                    z = conditioned_overshoot(state, tpar, gamma, level)
                    l_done = True
            y = y1
        if past_t and strad_done and l_done:
            break

    out[0] = y_t
    out[1] = z
    out[2] = ymax - x
    out[3] = tau_l
    out[4] = 1.0 if strad else 0.0


@njit(cache=True, nogil=True)
def grid_path(par, t, x, level, horizon, step, state, out):
    """Euler grid of mesh ``step`` with jumps at exact Poisson epochs.

    Y is updated by the Lindley recursion at every grid point and jump
    epoch.  A passage detected at the end of a diffusion step counts as
    creeping (zero overshoot).
    """
    d = par[0]
    sig = par[1]
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    s = 0.0
    y = 0.0
    ymax = 0.0
    past_t = False
    y_t = 0.0
    tau_x = -1.0
    zero_after_x = False
    strad_done = False
    strad = False
    l_done = False
    tau_l = NAN
    z = NAN
    k = 1
    next_grid = step
    next_jump = s + exponential(state, total) if total > 0.0 else math.inf

    while True:
        target = next_grid
        kind = 0
        if next_jump < target:
            target = next_jump
            kind = 1
        if not past_t and t <= target:
            target = t
            kind = 2
        h = target - s
        if h > 0.0:
            y1 = y + d * h + sig * math.sqrt(h) * normal(state)
            if y1 <= 0.0:
                y1 = 0.0
                if tau_x >= 0.0 and not past_t:
                    zero_after_x = True
                if past_t and not strad_done and tau_x < 0.0:
                    strad_done = True
            else:
                if tau_x < 0.0 and y <= x < y1:
                    tau_x = target
                    if past_t and not strad_done:
                        strad = True
                        strad_done = True
                if not l_done and y <= level < y1 and target <= horizon:
                    tau_l = target
                    z = 0.0
                    l_done = True
            y = y1
        s = target
        if not past_t and y > ymax:
            ymax = y
        if kind == 2:
            past_t = True
            y_t = y
            if not strad_done:
                if tau_x >= 0.0:
                    strad = not zero_after_x
                    strad_done = True
                elif y == 0.0:
                    strad_done = True
            if t == next_grid:
                k += 1
                next_grid = k * step
        elif kind == 0:
            k += 1
            next_grid = k * step
        else:
            jump = _jump(state, lam_up, alpha, lam_down, beta)
            y1 = y + jump
            if jump > 0.0:
                if tau_x < 0.0 and y <= x < y1:
                    tau_x = s
                    if past_t and not strad_done:
                        strad = True
                        strad_done = True
                if not l_done and y <= level < y1 and s <= horizon:
                    tau_l = s
                    z = y1 - level
                    l_done = True
                if not past_t and y1 > ymax:
                    ymax = y1
            elif y1 <= 0.0:
                y1 = 0.0
                if tau_x >= 0.0 and not past_t:
                    zero_after_x = True
                if past_t and not strad_done and tau_x < 0.0:
                    strad_done = True
            y = y1
            next_jump = s + exponential(state, total)
        if not l_done and s >= horizon:
            l_done = True
        if past_t and strad_done and l_done:
            break

    out[0] = y_t
    out[1] = z
    out[2] = ymax - x
    out[3] = tau_l
    out[4] = 1.0 if strad else 0.0


@njit(cache=True, nogil=True)
def functionals_batch(par, t, x, level, horizon, step, regen, tpar, gamma, seed, start, out):
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    for i in range(out.shape[0]):
        rng_init(state, seed, np.uint64(start + i))
        if par[1] == 0.0:
            exact_path(par, t, x, level, horizon, regen, tpar, gamma, state, out[i])
        else:
            grid_path(par, t, x, level, horizon, step, state, out[i])


@njit(cache=True, nogil=True)
def exit_path(par, x, z, step, state):
    """First exit of X from ``[-z, x]``; returns ``(upper, X(T), T)``."""
    d = par[0]
    sig = par[1]
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    xx = 0.0
    s = 0.0
    if sig == 0.0:
        while True:
            dt = exponential(state, total)
            x1 = xx + d * dt
            if d > 0.0 and x1 > x:
                return True, x, s + (x - xx) / d
            if d < 0.0 and x1 < -z:
                return False, -z, s + (xx + z) / -d
            xx = x1
            s += dt
            xx += _jump(state, lam_up, alpha, lam_down, beta)
            if xx > x:
                return True, xx, s
            if xx < -z:
                return False, xx, s
    next_jump = exponential(state, total) if total > 0.0 else math.inf
    k = 1
    while True:
        target = k * step
        is_jump = next_jump < target
        if is_jump:
            target = next_jump
        h = target - s
        if h > 0.0:
            xx += d * h + sig * math.sqrt(h) * normal(state)
        s = target
        if xx > x:
            return True, x, s
        if xx < -z:
            return False, xx, s
        if is_jump:
            xx += _jump(state, lam_up, alpha, lam_down, beta)
            next_jump = s + exponential(state, total)
            if xx > x:
                return True, xx, s
            if xx < -z:
                return False, xx, s
        else:
            k += 1


@njit(cache=True, nogil=True)
def exit_weights_batch(par, x, z, step, theta, psi_theta, seed, start, out):
    """Likelihood-ratio weights ``exp(-theta X(T) + T psi(theta))`` on the upper exit, 0 otherwise."""
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    for i in range(out.shape[0]):
        rng_init(state, seed, np.uint64(start + i))
        upper, xt, tt = exit_path(par, x, z, step, state)
        out[i] = math.exp(-theta * xt + tt * psi_theta) if upper else 0.0


@njit(cache=True, nogil=True)
def overshoot_integral_path(par, qs, us, state, acc):
    """Pathwise ``int q e^{-q x} exp(-u K(x)) dx`` for each pair ``(q, u)``.

    ``K(x)`` is the overshoot of X over ``x`` at its first passage.  The
    running maximum is piecewise: creeping stretches contribute with zero
    overshoot, a jump from ``R`` to ``R + D`` contributes in closed form.
    The path stops once ``exp(-q R) < 1e-16`` for every ``q``.
    """
    d = par[0]
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    qmin = qs[0]
    for j in range(qs.shape[0]):
        acc[j] = 0.0
        if qs[j] < qmin:
            qmin = qs[j]
    stop = 37.0 / qmin
    xx = 0.0
    r = 0.0
    while r < stop:
        x1 = xx + d * exponential(state, total)
        if x1 > r:
            for j in range(qs.shape[0]):
                acc[j] += math.exp(-qs[j] * r) - math.exp(-qs[j] * x1)
            r = x1
        xx = x1
        xx += _jump(state, lam_up, alpha, lam_down, beta)
        if xx > r:
            dd = xx - r
            for j in range(qs.shape[0]):
                q = qs[j]
                u = us[j]
                if q == u:
                    part = q * dd * math.exp(-q * dd)
                else:
                    part = q * (math.exp(-q * dd) - math.exp(-u * dd)) / (u - q)
                acc[j] += math.exp(-q * r) * part
            r = xx


@njit(cache=True, nogil=True)
def overshoot_integral_batch(par, qs, us, seed, start, out):
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    for i in range(out.shape[0]):
        rng_init(state, seed, np.uint64(start + i))
        overshoot_integral_path(par, qs, us, state, out[i])


@njit(cache=True, nogil=True)
def running_sup_path(par, t, step, state):
    """``sup_{s <= t} X(s)``; exact without diffusion, on the grid otherwise."""
    d = par[0]
    sig = par[1]
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    xx = 0.0
    best = 0.0
    s = 0.0
    if sig == 0.0:
        while True:
            dt = exponential(state, total)
            if s + dt >= t:
                xx += d * (t - s)
                return max(best, xx)
            xx += d * dt
            s += dt
            if xx > best:
                best = xx
            xx += _jump(state, lam_up, alpha, lam_down, beta)
            if xx > best:
                best = xx
    next_jump = exponential(state, total) if total > 0.0 else math.inf
    k = 1
    while True:
        target = min(k * step, t)
        is_jump = next_jump < target
        if is_jump:
            target = next_jump
        h = target - s
        if h > 0.0:
            xx += d * h + sig * math.sqrt(h) * normal(state)
        s = target
        if xx > best:
            best = xx
        if s >= t:
            return best
        if is_jump:
            xx += _jump(state, lam_up, alpha, lam_down, beta)
            next_jump = s + exponential(state, total)
            if xx > best:
                best = xx
        else:
            k += 1


@njit(cache=True, nogil=True)
def running_sup_batch(par, t, step, seed, start, out):
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    for i in range(out.shape[0]):
        rng_init(state, seed, np.uint64(start + i))
        out[i] = running_sup_path(par, t, step, state)


@njit(cache=True)
def jump_events(par, t_end, seed, index, max_events):
    """Jump epochs and signed sizes on ``[0, t_end]`` in the draw order of :func:`exact_path`."""
    lam_up, alpha, lam_down, beta = par[2], par[3], par[4], par[5]
    total = lam_up + lam_down
    state = np.empty(STATE_SIZE, dtype=np.uint64)
    rng_init(state, seed, np.uint64(index))
    times = np.empty(max_events)
    sizes = np.empty(max_events)
    s = 0.0
    n = 0
    while n < max_events:
        s += exponential(state, total)
        if s > t_end:
            break
        times[n] = s
        sizes[n] = _jump(state, lam_up, alpha, lam_down, beta)
        n += 1
    return times[:n], sizes[:n]
