"""Compiled inner loops for the walk, difference and hitting processes.

Every batch driver takes a single ``uint32`` seed and reseeds numba's
generator with it, so one call is one reproducible stream. Callers split work
into blocks with independent seeds (see :mod:`poisson_web.seeding`).
"""
from __future__ import annotations

import numpy as np
from numba import njit

# event-log row kinds
EV_BIRTH = 0
EV_JUMP = 1
EV_MERGE = 2


@njit(cache=True)
def _union(pos, k, r, seg_lo, seg_hi):
    """Merge the sorted intervals ``[pos[i] - r, pos[i] + r]``; return (segments, length)."""
    ns = 0
    total = 0.0
    lo = pos[0] - r
    hi = pos[0] + r
    for i in range(1, k):
        a = pos[i] - r
        if a <= hi:
            hi = max(hi, pos[i] + r)
        else:
            seg_lo[ns] = lo
            seg_hi[ns] = hi
            total += hi - lo
            ns += 1
            lo = a
            hi = pos[i] + r
    seg_lo[ns] = lo
    seg_hi[ns] = hi
    total += hi - lo
    return ns + 1, total


@njit(cache=True)
def _union_point(seg_lo, seg_hi, ns, u):
    """Point at arc length ``u`` along the merged segments."""
    for j in range(ns):
        w = seg_hi[j] - seg_lo[j]
        if u <= w or j == ns - 1:
            return seg_lo[j] + min(u, w)
        u -= w
    return seg_hi[ns - 1]


@njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True)
def _system_core(birth_t, birth_x, lam, r, horizon, obs_times, stop_below,
                 obs, parent, log, cap):
    """Coalescing walks from births sorted by time; see ``simulate_system``.

    Fills ``obs[o, j]`` with walker j's position at ``obs_times[o]`` (nan if
    unborn), ``parent`` with the union-find forest (root = earliest-listed
    walker of the class in position order) and, when ``cap > 0``, ``log`` with
    ``(time, kind, a, b, x)`` rows. Returns (end time, live classes, log rows),
    log rows being ``-1`` on overflow.
    """
    m = len(birth_t)
    n_obs = len(obs_times)
    for j in range(m):
        parent[j] = j
    for o in range(n_obs):
        for j in range(m):
            obs[o, j] = np.nan
    cpos = np.empty(m)
    cid = np.empty(m, dtype=np.int64)
    seg_lo = np.empty(m)
    seg_hi = np.empty(m)
    k = 0
    born = 0
    n_log = 0
    oi = 0
    t = 0.0 if m == 0 else birth_t[0]
    while True:
        nb = birth_t[born] if born < m else np.inf
        if k > 0:
            ns, total = _union(cpos, k, r, seg_lo, seg_hi)
            t_ev = t + np.random.exponential(1.0 / (lam * total))
        else:
            t_ev = np.inf
        t_next = min(t_ev, nb, horizon)
        # observations strictly before the next change see the current state
        while oi < n_obs and obs_times[oi] < t_next:
            for j in range(born):
                root = _find(parent, j)
                for c in range(k):
                    if cid[c] == root:
                        obs[oi, j] = cpos[c]
                        break
            oi += 1
        if t_next >= horizon:
            t = horizon
            break
        if nb <= t_ev:
            t = nb
            x = birth_x[born]
            ins = 0
            while ins < k and cpos[ins] < x:
                ins += 1
            if ins < k and cpos[ins] == x:
                a = cid[ins]
                parent[born] = a
                if cap > 0:
                    if n_log < cap:
                        log[n_log, 0] = t
                        log[n_log, 1] = EV_MERGE
                        log[n_log, 2] = a
                        log[n_log, 3] = born
                        log[n_log, 4] = x
                    n_log += 1
            else:
                for c in range(k, ins, -1):
                    cpos[c] = cpos[c - 1]
                    cid[c] = cid[c - 1]
                cpos[ins] = x
                cid[ins] = born
                k += 1
            if cap > 0:
                if n_log < cap:
                    log[n_log, 0] = t
                    log[n_log, 1] = EV_BIRTH
                    log[n_log, 2] = born
                    log[n_log, 3] = -1
                    log[n_log, 4] = x
                n_log += 1
            born += 1
        else:
            t = t_ev
            land = _union_point(seg_lo, seg_hi, ns, np.random.random() * total)
            first = -1
            last = -1
            for c in range(k):
                if abs(cpos[c] - land) <= r:
                    if first < 0:
                        first = c
                    last = c
            if first < 0:
                # rounding at a segment end: attribute the point to the nearest class
                first = 0
                for c in range(1, k):
                    if abs(cpos[c] - land) < abs(cpos[first] - land):
                        first = c
                last = first
            keep = cid[first]
            for c in range(first, last + 1):
                if cid[c] < keep:
                    keep = cid[c]
            if cap > 0:
                if n_log < cap:
                    log[n_log, 0] = t
                    log[n_log, 1] = EV_JUMP
                    log[n_log, 2] = keep
                    log[n_log, 3] = -1
                    log[n_log, 4] = land
                n_log += 1
            for c in range(first, last + 1):
                if cid[c] != keep:
                    parent[cid[c]] = keep
                    if cap > 0:
                        if n_log < cap:
                            log[n_log, 0] = t
                            log[n_log, 1] = EV_MERGE
                            log[n_log, 2] = keep
                            log[n_log, 3] = cid[c]
                            log[n_log, 4] = land
                        n_log += 1
            cpos[first] = land
            cid[first] = keep
            shift = last - first
            if shift > 0:
                for c in range(first + 1, k - shift):
                    cpos[c] = cpos[c + shift]
                    cid[c] = cid[c + shift]
                k -= shift
        if born == m and k < stop_below:
            break
    if cap > 0 and n_log > cap:
        n_log = -1
    return t, k + (m - born), n_log


@njit(cache=True)
def system_run(birth_t, birth_x, lam, r, horizon, obs_times, stop_below, cap, seed):
    np.random.seed(seed)
    m = len(birth_t)
    obs = np.empty((len(obs_times), m))
    parent = np.empty(m, dtype=np.int64)
    log = np.empty((max(cap, 1), 5))
    t_end, n_live, n_log = _system_core(birth_t, birth_x, lam, r, horizon, obs_times,
                                        stop_below, obs, parent, log, cap)
    for j in range(m):
        parent[j] = _find(parent, j)
    return obs, parent, t_end, n_live, log[:max(n_log, 0)], n_log


@njit(cache=True)
def system_batch(birth_t, birth_x, lam, r, horizon, obs_times, stop_below, n, seed):
    """``n`` replicas of one start configuration: observed positions, end times, live classes."""
    np.random.seed(seed)
    m = len(birth_t)
    out = np.empty((n, len(obs_times), m))
    t_end = np.empty(n)
    live = np.empty(n, dtype=np.int64)
    obs = np.empty((len(obs_times), m))
    parent = np.empty(m, dtype=np.int64)
    log = np.empty((1, 5))
    for i in range(n):
        t_end[i], live[i], _ = _system_core(birth_t, birth_x, lam, r, horizon, obs_times,
                                            stop_below, obs, parent, log, 0)
        out[i] = obs
    return out, t_end, live


@njit(cache=True)
def walk_features(lam, r, times, n, seed):
    """Single walks from the origin: values and running maxima at sorted ``times``."""
    np.random.seed(seed)
    k = len(times)
    val = np.empty((n, k))
    mx = np.empty((n, k))
    rate = 2.0 * r * lam
    t_last = times[k - 1]
    for i in range(n):
        t = 0.0
        x = 0.0
        m = 0.0
        oi = 0
        while oi < k:
            t += np.random.exponential(1.0 / rate)
            while oi < k and times[oi] < t:
                val[i, oi] = x
                mx[i, oi] = m
                oi += 1
            if t > t_last:
                break
            x += r * (2.0 * np.random.random() - 1.0)
            if x > m:
                m = x
    return val, mx


@njit(cache=True)
def jump_count(lam, r, t, n, seed):
    """Number of jumps by time ``t`` of ``n`` single walks."""
    np.random.seed(seed)
    out = np.empty(n, dtype=np.int64)
    rate = 2.0 * r * lam
    for i in range(n):
        s = np.random.exponential(1.0 / rate)
        c = 0
        while s <= t:
            c += 1
            s += np.random.exponential(1.0 / rate)
        out[i] = c
    return out


@njit(cache=True)
def discrete_walk(p, n, r, n_steps, seed):
    """Thinned-Bernoulli walk on the grid ``k / n``: each step jumps with probability ``p``."""
    np.random.seed(seed)
    y = np.empty(n_steps + 1)
    y[0] = 0.0
    for i in range(n_steps):
        z = 0.0
        if np.random.random() < p:
            z = r * (2.0 * np.random.random() - 1.0)
        y[i + 1] = y[i] + z
    return y


@njit(cache=True)
def discrete_walk_final(p, r, n_steps, n, seed):
    np.random.seed(seed)
    out = np.empty(n)
    for i in range(n):
        x = 0.0
        for _ in range(n_steps):
            if np.random.random() < p:
                x += r * (2.0 * np.random.random() - 1.0)
        out[i] = x
    return out


# ---------------------------------------------------------------- eta-bar


@njit(cache=True)
def crossings(a, b, lam, r, max_depth, xs):
    """Level crossings over ``[a, b]`` just below time 0.

    A vertex ``v`` with ``v2 <= 0`` crosses level 0 when its mother lies above
    0, i.e. no field point in ``|x1 - v1| <= r`` has time in ``(v2, 0]``. Points
    are generated downward on ``[a - r, b + r]``; generation stops once every
    point of ``[a, b]`` lies within ``r`` of a generated point, after which no
    deeper vertex can cross. Crossing positions go into ``xs`` in increasing
    order. Returns (count, truncated) where ``truncated`` means ``max_depth``
    was reached before ``[a, b]`` was covered.
    """
    lo = a - r
    width = b - a + 2.0 * r
    rate = lam * width
    cap = 64
    gx = np.empty(cap)
    ng = 0
    nc = 0
    depth = 0.0
    while True:
        depth += np.random.exponential(1.0 / rate)
        if depth > max_depth:
            break
        x = lo + width * np.random.random()
        hidden = False
        for j in range(ng):
            if abs(gx[j] - x) <= r:
                hidden = True
                break
        if ng == cap:
            cap *= 2
            g2 = np.empty(cap)
            g2[:ng] = gx[:ng]
            gx = g2
        gx[ng] = x
        ng += 1
        if not hidden and a <= x <= b:
            xs[nc] = x
            nc += 1
        # coverage check of [a, b]
        srt = np.sort(gx[:ng])
        reach = a
        for j in range(ng):
            if srt[j] - r > reach:
                break
            if srt[j] + r > reach:
                reach = srt[j] + r
        if reach >= b:
            xs[:nc] = np.sort(xs[:nc])
            return nc, False
    xs[:nc] = np.sort(xs[:nc])
    return nc, True


@njit(cache=True)
def eta_bar_batch(a, b, lam, r, t, max_depth, k, n, seed):
    """``n`` draws of the distinct-class count at time ``t`` over level-0 crossings of ``[a, b]``.

    Runs stop early once fewer than ``k`` classes remain, so counts are exact
    below ``k`` only as "less than k". Returns (counts, crossings, truncated).
    """
    np.random.seed(seed)
    counts = np.empty(n, dtype=np.int64)
    ncross = np.empty(n, dtype=np.int64)
    trunc = np.zeros(n, dtype=np.bool_)
    xs = np.empty(int((b - a) / r) + 2)
    obs_t = np.empty(0)
    log = np.empty((1, 5))
    for i in range(n):
        nc, tr = crossings(a, b, lam, r, max_depth, xs)
        ncross[i] = nc
        trunc[i] = tr
        if nc < k or nc < 2:
            counts[i] = nc
            continue
        bt = np.zeros(nc)
        bx = xs[:nc].copy()
        obs = np.empty((0, nc))
        parent = np.empty(nc, dtype=np.int64)
        _, live, _ = _system_core(bt, bx, lam, r, t, obs_t, k, obs, parent, log, 0)
        counts[i] = live
    return counts, ncross, trunc


# --------------------------------------------------------- difference processes


@njit(cache=True)
def _gap_step(x, u, r):
    """Quantile transform of the gap jump law at state ``x >= r``; ``u`` uniform.

    Non-decreasing in ``x`` for fixed ``u``, which gives the monotone coupling.
    """
    m = min(x, 2.0 * r)
    atom = (2.0 * r - m) / (2.0 * r + m)
    if u < atom:
        return 0.0
    if x < 2.0 * r:
        return 0.5 * (u * (2.0 * r + x) + x)
    return x - r + 2.0 * r * u


@njit(cache=True)
def _gap_rate(x, r, lam, prime):
    if prime:
        return 3.0 * r * lam
    return (2.0 * r + min(x, 2.0 * r)) * lam


@njit(cache=True)
def difference_run(prime, gamma, r, lam, horizon, max_jumps, seed):
    """One trajectory: jump times and post-jump states (first row is ``(0, gamma)``)."""
    np.random.seed(seed)
    out = np.empty((max_jumps + 1, 2))
    out[0, 0] = 0.0
    out[0, 1] = gamma
    t = 0.0
    x = gamma
    n = 1
    while x > 0.0 and n <= max_jumps:
        t += np.random.exponential(1.0 / _gap_rate(x, r, lam, prime))
        if t >= horizon:
            break
        x = _gap_step(x, np.random.random(), r)
        out[n, 0] = t
        out[n, 1] = x
        n += 1
    return out[:n]


@njit(cache=True)
def difference_values(prime, gamma, r, lam, times, n, seed):
    """States at sorted ``times`` and absorption times for ``n`` replicas."""
    np.random.seed(seed)
    k = len(times)
    val = np.empty((n, k))
    hit = np.empty(n)
    t_last = times[k - 1]
    for i in range(n):
        t = 0.0
        x = gamma
        oi = 0
        hit[i] = np.inf
        while True:
            if x == 0.0:
                hit[i] = t
                break
            t += np.random.exponential(1.0 / _gap_rate(x, r, lam, prime))
            while oi < k and times[oi] < t:
                val[i, oi] = x
                oi += 1
            if t > t_last:
                break
            x = _gap_step(x, np.random.random(), r)
        while oi < k:
            val[i, oi] = x
            oi += 1
    return val, hit


@njit(cache=True)
def difference_hitting(prime, gamma, r, lam, t_max, n, seed):
    """Absorption times of ``n`` replicas (``inf`` when censored at ``t_max``)."""
    np.random.seed(seed)
    out = np.empty(n)
    for i in range(n):
        t = 0.0
        x = gamma
        while x > 0.0 and t < t_max:
            t += np.random.exponential(1.0 / _gap_rate(x, r, lam, prime))
            x = _gap_step(x, np.random.random(), r)
        out[i] = t if (x == 0.0 and t <= t_max) else np.inf
    return out


@njit(cache=True)
def two_step_absorption(x, r, n, seed):
    """Per replica: 1 if the uniform-rate gap chain from ``x`` is absorbed exactly at its second jump."""
    np.random.seed(seed)
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        y = _gap_step(x, np.random.random(), r)
        if y > 0.0 and _gap_step(y, np.random.random(), r) == 0.0:
            out[i] = 1
    return out


@njit(cache=True)
def coupled_pair(gamma1, gamma2, r, lam, horizon, max_jumps, seed):
    """Two uniform-rate gap chains driven by one clock and one uniform per tick."""
    np.random.seed(seed)
    rate = 3.0 * r * lam
    out = np.empty((max_jumps + 1, 3))
    out[0, 0] = 0.0
    out[0, 1] = gamma1
    out[0, 2] = gamma2
    t = 0.0
    x1 = gamma1
    x2 = gamma2
    n = 1
    while x2 > 0.0 and n <= max_jumps:
        t += np.random.exponential(1.0 / rate)
        if t >= horizon:
            break
        u = np.random.random()
        if x1 > 0.0:
            x1 = _gap_step(x1, u, r)
        x2 = _gap_step(x2, u, r)
        out[n, 0] = t
        out[n, 1] = x1
        out[n, 2] = x2
        n += 1
    return out[:n]


@njit(cache=True)
def hitting_batch(gamma, r, lam, t_max, n, seed):
    """First times the rate-``3 r lam`` uniform walk from ``gamma`` is ``<= 0`` (``inf`` if censored)."""
    np.random.seed(seed)
    rate = 3.0 * r * lam
    out = np.empty(n)
    for i in range(n):
        if gamma <= 0.0:
            out[i] = 0.0
            continue
        t = 0.0
        x = gamma
        out[i] = np.inf
        while True:
            t += np.random.exponential(1.0 / rate)
            if t > t_max:
                break
            x += r * (2.0 * np.random.random() - 1.0)
            if x <= 0.0:
                out[i] = t
                break
    return out
