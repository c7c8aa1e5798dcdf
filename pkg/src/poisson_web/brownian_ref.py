"""Discretised Brownian motions, Arratia's coalescing map and normal references.

:func:`coalesce_bm` turns independent grid Brownian paths into coalescing
ones. Meetings are detected at the first grid step where the difference of two
live classes changes sign or hits zero; the meeting time is refined by linear
interpolation across that step. There is no Brownian-bridge correction, so a
crossing inside a step that recrosses before the next grid point is missed;
the induced delay is of order ``sqrt(h)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from poisson_web.errors import DomainError, ParameterError
from poisson_web.path_space import PlanarPath
from poisson_web.seeding import derive_seed, generator

# start-time alignment tolerance, in units of the grid step
_GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GridPath:
    """Path sampled at ``t0 + k h``, ``k = 0..K``, started at ``start = (x, t0)``."""

    start: tuple[float, float]
    h: float
    values: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ParameterError(f"grid step must be positive, got {self.h}")
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if len(v) == 0:
            raise ParameterError("a grid path needs at least one value")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))

    @property
    def t0(self) -> float:
        return self.start[1]

    @property
    def K(self) -> int:
        return len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.values))

    def __call__(self, t):
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def to_path(self) -> PlanarPath:
        return PlanarPath(np.column_stack((self.times, self.values)))


def sample_bm(start, h: float, K: int, seed: int) -> GridPath:
    """Brownian path from ``start = (x, t0)`` on ``K`` steps of size ``h``."""
    if not h > 0:
        raise ParameterError(f"grid step must be positive, got {h}")
    if K < 0:
        raise ParameterError(f"K must be non-negative, got {K}")
    rng = generator(seed, "bm")
    steps = rng.standard_normal(K) * math.sqrt(h)
    values = float(start[0]) + np.concatenate(([0.0], np.cumsum(steps)))
    return GridPath(start, h, values)


@dataclass
class CoalescedSystem:
    """Output of :func:`coalesce_bm`.

    ``paths[j]`` is the coalesced version of input ``j``; ``labels[j]`` its
    final class (the smallest input index in the class). ``merges`` lists
    ``(gamma_k, p_k, kept, absorbed)`` in time order.
    """

    paths: list[GridPath]
    labels: np.ndarray
    merges: list[tuple[float, float, int, int]]

    @property
    def n_classes(self) -> int:
        return int(len(np.unique(self.labels)))

    @property
    def gammas(self) -> list[float]:
        return [m[0] for m in self.merges]

    @property
    def positions(self) -> list[float]:
        return [m[1] for m in self.merges]


def _align(paths: Sequence[GridPath]):
    h = paths[0].h
    if any(abs(p.h - h) > _GRID_TOL * h for p in paths):
        raise DomainError("paths use different grid steps")
    T0 = min(p.t0 for p in paths)
    offs = []
    for p in paths:
        k = (p.t0 - T0) / h
        if abs(k - round(k)) > 1e-6:
            raise DomainError("path start times are not on a common grid")
        offs.append(int(round(k)))
    n = max(o + len(p.values) for o, p in zip(offs, paths))
    V = np.full((len(paths), n), np.nan)
    for j, (o, p) in enumerate(zip(offs, paths)):
        V[j, o:o + len(p.values)] = p.values
    return T0, h, np.array(offs), V


def _first_meeting(d: np.ndarray, k0: int):
    """First index ``k >= k0`` where ``d`` hits 0 or changes sign from ``k - 1`` (nan-aware)."""
    if k0 >= len(d) or np.isnan(d[k0]):
        return None
    if d[k0] == 0:
        return k0
    s = np.sign(d[k0:])
    hit = np.flatnonzero((s[1:] != s[0]) & ~np.isnan(s[1:]))
    return None if len(hit) == 0 else k0 + 1 + int(hit[0])


def coalesce_bm(paths: Sequence[GridPath]) -> CoalescedSystem:
    """Arratia's renewal: merge the earliest-meeting pair of live classes, repeat.

    Two classes meet at the first grid index, both alive, where their
    difference is 0 or has changed sign. Simultaneous meetings go to the pair
    with the smaller post-crossing gap, then the lexicographically smaller
    label pair. The later-listed class is absorbed and follows the earlier one
    from the meeting index on.
    """
    m = len(paths)
    if m == 0:
        return CoalescedSystem([], np.empty(0, dtype=np.int64), [])
    T0, h, offs, V = _align(paths)
    live = list(range(m))
    label = np.arange(m)
    absorbed_at = {}
    merges = []
    while len(live) > 1:
        best = None
        for ai in range(len(live)):
            for bi in range(ai + 1, len(live)):
                i, j = live[ai], live[bi]
                d = V[i] - V[j]
                k = _first_meeting(d, max(offs[i], offs[j]))
                if k is None:
                    continue
                key = (k, abs(d[k]), i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        k, _, i, j = best
        d = V[i] - V[j]
        if d[k] == 0 or k == max(offs[i], offs[j]):
            gamma = T0 + k * h
            pos = V[i, k]
        else:
            frac = d[k - 1] / (d[k - 1] - d[k])
            gamma = T0 + (k - 1 + frac) * h
            pos = V[i, k - 1] + frac * (V[i, k] - V[i, k - 1])
        merges.append((float(gamma), float(pos), i, j))
        live.remove(j)
        absorbed_at[j] = (k, i)
        label[label == j] = i
    # coalesced values: follow the absorbing class from the meeting index on
    C = V.copy()
    for j in range(m):
        row = C[j]
        cur = j
        while cur in absorbed_at:
            k, nxt = absorbed_at[cur]
            row[k:] = V[nxt, k:]
            cur = nxt
    out = []
    for j, p in enumerate(paths):
        vals = C[j, offs[j]:offs[j] + len(p.values)]
        out.append(GridPath(p.start, p.h, vals))
    return CoalescedSystem(out, label, merges)


def bm_coalescence_times(eps: float, h: float, t_max: float, n: int, seed: int) -> np.ndarray:
    """Coalescence times of ``n`` pairs of grid Brownian motions started ``eps`` apart.

    Each pair goes through :func:`coalesce_bm`; pairs still apart at ``t_max``
    give ``inf``.
    """
    if not (eps > 0 and h > 0 and t_max > 0):
        raise ParameterError("eps, h and t_max must be positive")
    K = int(math.ceil(t_max / h))
    out = np.full(n, np.inf)
    for i in range(n):
        p1 = sample_bm((0.0, 0.0), h, K, seed=derive_seed(seed, "bm_pair", i, 0))
        p2 = sample_bm((eps, 0.0), h, K, seed=derive_seed(seed, "bm_pair", i, 1))
        sysm = coalesce_bm([p1, p2])
        if sysm.merges and sysm.merges[0][0] <= t_max:
            out[i] = sysm.merges[0][0]
    return out


def normal_cdf(x):
    """Standard normal distribution function (``scipy.special.ndtr``, double precision)."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def b1_limit(eps, t):
    """``2 Phi(eps / sqrt(2 t)) - 1``: probability two Brownian motions ``eps`` apart stay apart up to ``t``."""
    eps = np.asarray(eps, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(eps < 0) or np.any(t <= 0):
        raise ParameterError("need eps >= 0 and t > 0")
    out = 2.0 * ndtr(eps / np.sqrt(2.0 * t)) - 1.0
    return float(out) if np.ndim(out) == 0 else out


def coalescence_cdf(t, eps: float):
    """Distribution function of the meeting time of two Brownian motions ``eps`` apart."""
    t = np.asarray(t, dtype=float)
    out = np.where(t > 0, 1.0 - b1_limit(eps, np.maximum(t, 1e-300)), 0.0)
    return float(out) if np.ndim(out) == 0 else out
