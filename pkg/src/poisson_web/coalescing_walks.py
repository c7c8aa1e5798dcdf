"""Coalescing walk systems, gap processes, the hitting walk and the FKG apparatus.

Walk systems are simulated without materialising the planar field. While the
live classes sit at positions ``p_1 < ... < p_k`` the next field point that any
of them can hit arrives at rate ``lam * |U|`` with ``U`` the union of the
intervals ``[p_c - r, p_c + r]``, and lands uniformly on ``U``. Every class
within ``r`` of the landing point jumps onto it, so classes that land together
merge. This is the restriction of the field to the region the walks can see,
so the joint law is exact.

Gap processes are sampled through a quantile map of the jump law: with one
uniform ``u`` per tick, the new state is 0 when ``u`` falls in the atom and a
point of ``[r, x + r]`` (or ``x + [-r, r]`` for ``x >= 2r``) otherwise. The map
is non-decreasing in the current state, so feeding two chains the same clock
and the same uniforms keeps them ordered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from poisson_web import _kernels as K
from poisson_web.errors import DomainError, ParameterError
from poisson_web.path_space import PlanarPath
from poisson_web.seeding import blocks, derive_seed

DELTA = "delta"
DELTA_PRIME = "delta_prime"
_KINDS = (DELTA, DELTA_PRIME)


def _check_rates(lam, r):
    if not (lam > 0 and r > 0):
        raise ParameterError(f"need lam > 0 and r > 0, got lam={lam}, r={r}")


def _sorted_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if len(t) == 0 or np.any(np.diff(t) <= 0) or t[0] < 0:
        raise ParameterError("observation times must be non-negative and strictly increasing")
    return t


# ------------------------------------------------------------------ trajectories


@dataclass(frozen=True, eq=False)
class StepTrajectory:
    """Right-continuous step function: ``values[i]`` on ``[times[i], times[i + 1])``.

    Before ``times[0]`` it is frozen at the first value, like :class:`PlanarPath`.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or len(t) == 0:
            raise ParameterError("times and values must be equal-length 1-d arrays")
        if np.any(np.diff(t) < 0):
            raise ParameterError("jump times must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = self.values[np.maximum(idx, 0)]
        return float(out) if np.ndim(out) == 0 else out

    def __len__(self):
        return len(self.times)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def to_path(self) -> PlanarPath:
        """Linear interpolation through the jump points (the interpolated walk)."""
        keep = np.append(np.diff(self.times) > 0, True)
        return PlanarPath(np.column_stack((self.times[keep], self.values[keep])))


def walk_from_tree(tree, s, horizon: float | None = None) -> StepTrajectory:
    """Step-function walk of a tree vertex: the n-th ancestor's position on ``[tau_n, tau_{n+1})``."""
    horizon = tree.horizon if horizon is None else float(horizon)
    i = s if isinstance(s, (int, np.integer)) else tree.index_of(s)
    if i is None:
        raise ParameterError(f"{s} is not a vertex of the tree")
    chain = tree.chain(i, horizon)
    pts = tree.points[chain]
    if len(chain) > 1 and pts[-1, 1] > horizon:
        pts = pts[:-1]
    return StepTrajectory(pts[:, 1], pts[:, 0])


# ------------------------------------------------------------------ walk systems


@dataclass
class WalkSystem:
    """Outcome of :func:`simulate_system`.

    ``starts`` keeps the caller's order as ``(x1, x2)`` rows; ``labels[j]`` is
    the class representative of walker ``j`` at the end of the run (the
    earliest-born member, ties by input order). ``merges`` lists
    ``(time, kept, absorbed)`` in event order.
    """

    lam: float
    r: float
    starts: np.ndarray
    t_end: float
    labels: np.ndarray
    trajectories: list[StepTrajectory]
    merges: list[tuple[float, int, int]]
    events: np.ndarray = field(repr=False)

    @property
    def n_walkers(self) -> int:
        return len(self.starts)

    def n_classes(self) -> int:
        return int(len(np.unique(self.labels)))

    def classes(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for j, c in enumerate(self.labels):
            out.setdefault(int(c), []).append(j)
        return list(out.values())

    def positions(self, t: float) -> np.ndarray:
        """Walker positions at time ``t`` (nan for walkers born later)."""
        return np.array([tr(t) if t >= self.starts[j, 1] else np.nan
                         for j, tr in enumerate(self.trajectories)])

    def merge_time(self, i: int, j: int) -> float:
        """Time walkers ``i`` and ``j`` joined one class (``inf`` if they never did)."""
        if self.labels[i] != self.labels[j]:
            return math.inf
        parent = list(range(self.n_walkers))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        for t, a, b in self.merges:
            parent[find(b)] = find(a)
            if find(i) == find(j):
                return t
        return math.inf


def simulate_system(starts, lam: float, r: float, horizon: float, seed: int,
                    max_events: int = 1 << 16) -> WalkSystem:
    """Coalescing walks born at the space-time points ``starts`` and run to ``horizon``.

    Deterministic given ``seed``. Walkers born at exactly the position of a
    live class join it at birth.
    """
    _check_rates(lam, r)
    pts = np.asarray(starts, dtype=float).reshape(-1, 2)
    m = len(pts)
    if m == 0:
        return WalkSystem(lam, r, pts, float(horizon), np.empty(0, dtype=np.int64), [], [],
                          np.empty((0, 5)))
    if not horizon > pts[:, 1].max():
        raise ParameterError("horizon must exceed every birth time")
    order = np.argsort(pts[:, 1], kind="stable")
    bt, bx = pts[order, 1].copy(), pts[order, 0].copy()
    cap = max_events
    while True:
        _, parent, t_end, _, log, n_log = K.system_run(bt, bx, lam, r, float(horizon),
                                                       np.empty(0), 0, cap,
                                                       derive_seed(seed, "system"))
        if n_log >= 0:
            break
        cap *= 4
    # kernel ids are birth-order slots; map back to caller labels
    labels = np.empty(m, dtype=np.int64)
    labels[order] = order[parent]
    merges = [(float(row[0]), int(order[int(row[2])]), int(order[int(row[3])]))
              for row in log if row[1] == K.EV_MERGE]
    trajectories = []
    for slot in range(m):
        cur = slot
        ts, xs = [bt[slot]], [bx[slot]]
        for row in log:
            kind = row[1]
            if kind == K.EV_JUMP and int(row[2]) == cur and row[0] > bt[slot]:
                ts.append(row[0])
                xs.append(row[4])
            elif kind == K.EV_MERGE and int(row[3]) == cur:
                cur = int(row[2])
                if row[0] > bt[slot]:
                    ts.append(row[0])
                    xs.append(row[4])
        trajectories.append(StepTrajectory(np.array(ts), np.array(xs)))
    trajectories = [trajectories[k] for k in np.argsort(order)]
    events = log.copy()
    mask = events[:, 2] >= 0
    events[mask, 2] = order[events[mask, 2].astype(np.int64)]
    mask = events[:, 3] >= 0
    events[mask, 3] = order[events[mask, 3].astype(np.int64)]
    return WalkSystem(lam, r, pts, float(t_end), labels, trajectories, merges, events)


def walk_samples(lam: float, r: float, times, n: int, seed: int, key=0):
    """Positions and running maxima at ``times`` of ``n`` single walks from the origin.

    Returns two ``(n, len(times))`` arrays.
    """
    _check_rates(lam, r)
    t = _sorted_times(times)
    val = np.empty((n, len(t)))
    mx = np.empty((n, len(t)))
    for start, size, s in blocks(n, seed, "walk", key):
        v, m = K.walk_features(lam, r, t, size, s)
        val[start:start + size] = v
        mx[start:start + size] = m
    return val, mx


def jump_counts(lam: float, r: float, t: float, n: int, seed: int) -> np.ndarray:
    _check_rates(lam, r)
    out = np.empty(n, dtype=np.int64)
    for start, size, s in blocks(n, seed, "jumps"):
        out[start:start + size] = K.jump_count(lam, r, t, size, s)
    return out


def system_samples(starts, lam: float, r: float, horizon: float, times, n: int, seed: int,
                   stop_below: int = 0, key=0):
    """``n`` replicas of one system: positions ``(n, len(times), m)``, end times, live classes.

    With ``stop_below = k`` a replica ends once fewer than ``k`` classes remain;
    its end time is then the time of that merge.
    """
    _check_rates(lam, r)
    pts = np.asarray(starts, dtype=float).reshape(-1, 2)
    order = np.argsort(pts[:, 1], kind="stable")
    bt, bx = pts[order, 1].copy(), pts[order, 0].copy()
    t = np.asarray(times, dtype=float).reshape(-1)
    pos = np.empty((n, len(t), len(pts)))
    t_end = np.empty(n)
    live = np.empty(n, dtype=np.int64)
    for start, size, s in blocks(n, seed, "system", key):
        p, te, lv = K.system_batch(bt, bx, lam, r, float(horizon), t, stop_below, size, s)
        pos[start:start + size][:, :, order] = p
        t_end[start:start + size] = te
        live[start:start + size] = lv
    return pos, t_end, live


def gap_samples(gamma: float, lam: float, r: float, times, n: int, seed: int) -> np.ndarray:
    """``|xi^(gamma,0)(t) - xi^(0,0)(t)|`` at ``times`` for ``n`` joint two-walk systems."""
    t = _sorted_times(times)
    pos, _, _ = system_samples([(0.0, 0.0), (gamma, 0.0)], lam, r, t[-1] + 1.0,
                               t, n, seed, key="gap")
    return np.abs(pos[:, :, 1] - pos[:, :, 0])


def coalescence_times(gamma: float, lam: float, r: float, t_max: float, n: int,
                      seed: int) -> np.ndarray:
    """Merge times of two walks started ``gamma`` apart (``inf`` when not merged by ``t_max``)."""
    _, t_end, live = system_samples([(0.0, 0.0), (gamma, 0.0)], lam, r, t_max, np.empty(0), n,
                                    seed, stop_below=2, key="coalescence")
    return np.where(live < 2, t_end, np.inf)


@dataclass(frozen=True)
class EtaBarSample:
    counts: np.ndarray
    crossings: np.ndarray
    truncated: np.ndarray
    k: int

    def at_least(self, k: int) -> np.ndarray:
        if k > self.k and self.k > 0:
            raise ParameterError(f"runs stopped below {self.k} classes; cannot test >= {k}")
        return self.counts >= k


def eta_bar_samples(a: float, b: float, lam: float, r: float, t: float, depth: float,
                    n: int, seed: int, k: int = 0, key=0) -> EtaBarSample:
    """Draws of the eta-bar count over ``[a, b]`` between levels 0 and ``t`` (tree units).

    Only the vertices crossing level 0 matter: every vertex born by 0 that is in
    ``[a, b]`` at time 0 shares its walk after 0 with the crossing vertex it
    descends through, and two crossings are at least ``r`` apart. Those are
    sampled exactly, scanning down at most ``depth``; the field above 0 then
    drives a coalescing system from the crossing positions. With ``k > 0`` runs
    stop once fewer than ``k`` classes remain, which is enough to decide
    ``eta_bar >= k``.
    """
    _check_rates(lam, r)
    if not a < b:
        raise ParameterError(f"need a < b, got [{a}, {b}]")
    if not (t > 0 and depth > 0):
        raise ParameterError("t and depth must be positive")
    counts = np.empty(n, dtype=np.int64)
    cross = np.empty(n, dtype=np.int64)
    trunc = np.empty(n, dtype=bool)
    for start, size, s in blocks(n, seed, "eta_bar", key):
        c, nc, tr = K.eta_bar_batch(a, b, lam, r, t, depth, k, size, s)
        counts[start:start + size] = c
        cross[start:start + size] = nc
        trunc[start:start + size] = tr
    return EtaBarSample(counts, cross, trunc, k)


# ------------------------------------------------------------------ gap processes


@dataclass(frozen=True, eq=False)
class DifferenceProcess:
    """Trajectory of the gap between two coalescing walks, or its uniform-rate variant."""

    kind: str
    gamma: float
    r: float
    lam: float
    trajectory: StepTrajectory

    def __post_init__(self):
        v = self.trajectory.values
        if np.any((v > 0) & (v < self.r)):
            raise AssertionError("gap process visited (0, r)")
        z = np.flatnonzero(v == 0)
        if len(z) and np.any(v[z[0]:] != 0):
            raise AssertionError("gap process left the absorbing state")

    def __call__(self, t):
        return self.trajectory(t)

    @property
    def absorption_time(self) -> float:
        z = np.flatnonzero(self.trajectory.values == 0)
        return float(self.trajectory.times[z[0]]) if len(z) else math.inf


def gap_rate(x: float, r: float, lam: float, kind: str = DELTA) -> float:
    """Jump rate at state ``x``: ``(2r + min(x, 2r)) lam``, or ``3 r lam`` for the uniform variant."""
    _check_kind(kind)
    return float(K._gap_rate(float(x), r, lam, kind == DELTA_PRIME))


def gap_atom(x: float, r: float) -> float:
    """Weight of the jump to 0 from state ``x``."""
    m = min(x, 2 * r)
    return (2 * r - m) / (2 * r + m)


def _check_kind(kind):
    if kind not in _KINDS:
        raise ParameterError(f"kind must be one of {_KINDS}, got {kind!r}")


def _check_gap(gamma, r):
    if gamma < r:
        raise DomainError(f"initial gap {gamma} below r = {r}")


def simulate_difference(kind: str, gamma: float, r: float, lam: float, horizon: float,
                        seed: int, max_jumps: int = 1 << 20) -> DifferenceProcess:
    _check_kind(kind)
    _check_rates(lam, r)
    _check_gap(gamma, r)
    out = K.difference_run(kind == DELTA_PRIME, gamma, r, lam, horizon, max_jumps,
                           derive_seed(seed, "difference"))
    return DifferenceProcess(kind, gamma, r, lam, StepTrajectory(out[:, 0], out[:, 1]))


def difference_values(kind: str, gamma: float, r: float, lam: float, times, n: int,
                      seed: int):
    """States at ``times`` ``(n, len(times))`` and absorption times of ``n`` replicas."""
    _check_kind(kind)
    _check_rates(lam, r)
    _check_gap(gamma, r)
    t = _sorted_times(times)
    val = np.empty((n, len(t)))
    hit = np.empty(n)
    for start, size, s in blocks(n, seed, "difference", kind):
        v, h = K.difference_values(kind == DELTA_PRIME, gamma, r, lam, t, size, s)
        val[start:start + size] = v
        hit[start:start + size] = h
    return val, hit


def difference_hitting_times(kind: str, gamma: float, r: float, lam: float, t_max: float,
                             n: int, seed: int) -> np.ndarray:
    _check_kind(kind)
    _check_gap(gamma, r)
    out = np.empty(n)
    for start, size, s in blocks(n, seed, "difference_hit", kind):
        out[start:start + size] = K.difference_hitting(kind == DELTA_PRIME, gamma, r, lam, t_max,
                                                       size, s)
    return out


def coupled_difference_pair(gamma1: float, gamma2: float, r: float, lam: float, horizon: float,
                            seed: int, max_jumps: int = 1 << 20):
    """Two uniform-rate gap chains from ``gamma1 <= gamma2`` on one clock, ordered for all time."""
    _check_rates(lam, r)
    _check_gap(gamma1, r)
    if gamma1 > gamma2:
        raise DomainError(f"need gamma1 <= gamma2, got {gamma1} > {gamma2}")
    out = K.coupled_pair(gamma1, gamma2, r, lam, horizon, max_jumps, derive_seed(seed, "coupled"))
    if np.any(out[:, 1] > out[:, 2]):
        raise AssertionError("coupling order violated")
    lo = DifferenceProcess(DELTA_PRIME, gamma1, r, lam, StepTrajectory(out[:, 0], out[:, 1]))
    hi = DifferenceProcess(DELTA_PRIME, gamma2, r, lam, StepTrajectory(out[:, 0], out[:, 2]))
    return lo, hi


def coupled_hitting_times(gamma1: float, gamma2: float, r: float, lam: float, horizon: float,
                          n: int, seed: int) -> np.ndarray:
    """``(n, 2)`` absorption times of coupled pairs (``inf`` if not absorbed by ``horizon``)."""
    out = np.empty((n, 2))
    for i in range(n):
        lo, hi = coupled_difference_pair(gamma1, gamma2, r, lam, horizon, derive_seed(seed, i))
        out[i] = lo.absorption_time, hi.absorption_time
    return out


# ------------------------------------------------------------------ hitting walk


def simulate_hitting(gamma: float, r: float, lam: float, t_max: float, seed: int):
    """First time the uniform-rate walk from ``gamma`` is ``<= 0``; ``None`` if censored at ``t_max``."""
    _check_rates(lam, r)
    t = K.hitting_batch(float(gamma), r, lam, float(t_max), 1, derive_seed(seed, "hitting"))[0]
    return None if math.isinf(t) else float(t)


def hitting_times(gamma: float, r: float, lam: float, t_max: float, n: int,
                  seed: int) -> np.ndarray:
    """``n`` hitting times, ``inf`` for censored replicas."""
    _check_rates(lam, r)
    out = np.empty(n)
    for start, size, s in blocks(n, seed, "hitting"):
        out[start:start + size] = K.hitting_batch(float(gamma), r, lam, float(t_max), size, s)
    return out


# ------------------------------------------------------------------ two-step absorption


def _check_px(x, r):
    if not (r > 0 and r <= x < 2 * r):
        raise DomainError(f"x must lie in [r, 2r) = [{r}, {2 * r}), got {x}")


def p_two_step(x: float, r: float) -> float:
    """Probability that the uniform-rate gap chain from ``x in [r, 2r)`` is absorbed at its second jump.

    The first jump avoids 0 with probability ``2x / (2r + x)`` and then lands
    uniformly on ``[r, r + x]``; from ``y`` the atom is ``(2r - y) / (2r + y)``
    for ``y < 2r`` and 0 beyond. Integrating gives
    ``2 (4 r ln(4/3) - r) / (2r + x)``.
    """
    _check_px(x, r)
    return 2.0 * (4.0 * r * math.log(4.0 / 3.0) - r) / (2.0 * r + x)


def p_two_step_stated(x: float, r: float) -> float:
    """Alternative closed form ``4r/(2r+x) ln((4r-x)/(3r-x)) - r/(2r+x)``, kept for comparison.

    It is half of :func:`p_two_step_integral` and disagrees with simulation.
    """
    _check_px(x, r)
    return 4.0 * r / (2.0 * r + x) * math.log((4.0 * r - x) / (3.0 * r - x)) - r / (2.0 * r + x)


def p_two_step_integral(x: float, r: float) -> float:
    """Quadrature of the alternative integral ``2x/(2r+x) int_{r-x}^{2r-x} (1/x)(2r-y)/(2r+y) dy``.

    It weighs the atom at the displacement ``y`` instead of the new state.
    """
    _check_px(x, r)
    val, _ = integrate.quad(lambda y: (2 * r - y) / (2 * r + y) / x, r - x, 2 * r - x)
    return 2.0 * x / (2.0 * r + x) * val


def p_infimum(r: float, n_grid: int = 10_001, p=p_two_step) -> float:
    """Grid minimum of ``p(x, r)`` over ``[r, 2r)``."""
    xs = r + r * np.arange(n_grid) / n_grid
    return float(min(p(float(x), r) for x in xs))


def two_step_frequency(x: float, r: float, n: int, seed: int):
    """Monte Carlo estimate and standard error of second-jump absorption from ``x``."""
    _check_px(x, r)
    hits = 0
    for _, size, s in blocks(n, seed, "two_step"):
        hits += int(K.two_step_absorption(float(x), r, size, s).sum())
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


# ------------------------------------------------------------------ FKG events

THRESHOLD = "threshold"
RUNNING_MAX = "running_max"
INCREMENT = "increment"
WHOLE = "whole"
_EVENT_KINDS = (THRESHOLD, RUNNING_MAX, INCREMENT, WHOLE)


@dataclass(frozen=True)
class PathEvent:
    """Event on a single walk from the origin.

    ``threshold``: ``xi(t) >= a``; ``running_max``: ``max_{s <= t} xi(s) >= a``;
    ``increment``: ``xi(t) - xi(t1) >= a``; ``whole``: every path. All are
    increasing under increment domination; ``complement=True`` negates the
    event, which makes it decreasing.
    """

    kind: str
    t: float = 0.0
    a: float = 0.0
    t1: float = 0.0
    complement: bool = False

    def __post_init__(self):
        if self.kind not in _EVENT_KINDS:
            raise ParameterError(f"unknown event kind {self.kind!r}; arbitrary predicates are not accepted")
        if self.kind != WHOLE and not self.t > 0:
            raise ParameterError("event time must be positive")
        if self.kind == INCREMENT and not 0 <= self.t1 < self.t:
            raise ParameterError("increment events need 0 <= t1 < t")

    @property
    def increasing(self) -> bool:
        return not self.complement

    def negate(self) -> "PathEvent":
        return PathEvent(self.kind, self.t, self.a, self.t1, not self.complement)

    def times(self) -> tuple[float, ...]:
        if self.kind == WHOLE:
            return ()
        if self.kind == INCREMENT and self.t1 > 0:
            return (self.t1, self.t)
        return (self.t,)

    def indicator(self, times: np.ndarray, val: np.ndarray, mx: np.ndarray) -> np.ndarray:
        if self.kind == WHOLE:
            hit = np.ones(len(val), dtype=bool)
        else:
            j = int(np.searchsorted(times, self.t))
            if self.kind == THRESHOLD:
                hit = val[:, j] >= self.a
            elif self.kind == RUNNING_MAX:
                hit = mx[:, j] >= self.a
            else:
                base = val[:, int(np.searchsorted(times, self.t1))] if self.t1 > 0 else 0.0
                hit = val[:, j] - base >= self.a
        return ~hit if self.complement else hit


def _library():
    thr = [PathEvent(THRESHOLD, t, a) for t, a in ((1.0, 0.0), (2.0, 0.5), (4.0, 1.0), (8.0, -0.5))]
    rmx = [PathEvent(RUNNING_MAX, t, a) for t, a in ((2.0, 0.5), (4.0, 1.0), (8.0, 2.0))]
    inc = [PathEvent(INCREMENT, t, a, t1) for t, a, t1 in ((4.0, 0.0, 2.0), (8.0, 0.5, 4.0),
                                                           (8.0, -0.5, 1.0))]
    pairs = [
        (thr[0], thr[1]), (thr[1], thr[2]), (thr[0], thr[3]), (thr[2], thr[3]),
        (rmx[0], rmx[1]), (rmx[1], rmx[2]), (thr[1], rmx[1]), (thr[3], rmx[2]),
        (inc[0], thr[2]), (inc[1], thr[3]), (inc[0], inc[1]), (inc[2], rmx[0]),
        (inc[1], rmx[2]), (thr[0], inc[2]),
    ]
    return tuple(pairs)


#: increasing event pairs checked for positive correlation
FKG_LIBRARY: tuple[tuple[PathEvent, PathEvent], ...] = _library()
#: increasing/decreasing pairs checked for negative correlation
FKG_COMPLEMENT_LIBRARY = tuple((a, b.negate()) for a, b in FKG_LIBRARY)


@dataclass(frozen=True)
class FKGEstimate:
    p_ab: float
    p_a: float
    p_b: float
    sigma: float
    n: int

    @property
    def product(self) -> float:
        return self.p_a * self.p_b

    @property
    def covariance(self) -> float:
        return self.p_ab - self.product


def _event_times(events):
    ts = sorted({t for e in events for t in e.times()})
    return np.array(ts if ts else [1.0])


def fkg_estimates(pairs: Sequence[tuple[PathEvent, PathEvent]], lam: float, r: float, n: int,
                  seed: int) -> list[FKGEstimate]:
    """Joint and product estimates for each pair, all from one set of ``n`` walks."""
    if n < 1000:
        raise ParameterError(f"need at least 1000 replicas, got {n}")
    for pair in pairs:
        for e in pair:
            if not isinstance(e, PathEvent):
                raise ParameterError("events must come from the PathEvent library")
    times = _event_times([e for p in pairs for e in p])
    val, mx = walk_samples(lam, r, times, n, seed, key="fkg")
    out = []
    for A, B in pairs:
        ia = A.indicator(times, val, mx).astype(float)
        ib = B.indicator(times, val, mx).astype(float)
        pa, pb = ia.mean(), ib.mean()
        prod = (ia - pa) * (ib - pb)
        out.append(FKGEstimate(float((ia * ib).mean()), float(pa), float(pb),
                               float(prod.std(ddof=1) / math.sqrt(n)), n))
    return out


def fkg_estimate(A: PathEvent, B: PathEvent, lam: float, r: float, n: int, seed: int,
                 horizon: float | None = None) -> FKGEstimate:
    if horizon is not None and max((*A.times(), *B.times(), 0.0)) > horizon:
        raise ParameterError("event times exceed the horizon")
    return fkg_estimates([(A, B)], lam, r, n, seed)[0]


def discrete_walk_yn(n: int, lam: float, r: float, horizon: float, seed: int) -> StepTrajectory:
    """Discrete-time walk on the grid ``k / n``: each step is ``Z * J`` with ``P(J = 1) = 2 r lam / n``."""
    _check_rates(lam, r)
    if not n > 2 * r * lam:
        raise ParameterError(f"need n > 2 r lam = {2 * r * lam}, got {n}")
    steps = int(math.floor(horizon * n))
    y = K.discrete_walk(2 * r * lam / n, n, r, steps, derive_seed(seed, "yn"))
    return StepTrajectory(np.arange(steps + 1) / n, y)


def discrete_walk_samples(n: int, lam: float, r: float, t: float, size: int,
                          seed: int) -> np.ndarray:
    """``size`` draws of ``Y_n(t)``."""
    if not n > 2 * r * lam:
        raise ParameterError(f"need n > 2 r lam = {2 * r * lam}, got {n}")
    steps = int(math.floor(t * n))
    out = np.empty(size)
    for start, m, s in blocks(size, seed, "yn_batch", n):
        out[start:start + m] = K.discrete_walk_final(2 * r * lam / n, r, steps, m, s)
    return out


__all__ = [
    "DELTA", "DELTA_PRIME", "DifferenceProcess", "EtaBarSample", "FKGEstimate", "FKG_LIBRARY",
    "FKG_COMPLEMENT_LIBRARY", "PathEvent", "StepTrajectory", "WalkSystem",
    "coalescence_times", "coupled_difference_pair", "coupled_hitting_times", "difference_hitting_times",
    "difference_values", "discrete_walk_samples", "discrete_walk_yn", "eta_bar_samples",
    "fkg_estimate", "fkg_estimates", "gap_atom", "gap_rate", "gap_samples", "hitting_times",
    "jump_counts", "p_infimum", "p_two_step", "p_two_step_integral", "p_two_step_stated",
    "simulate_difference", "simulate_hitting", "simulate_system", "system_samples",
    "two_step_frequency", "walk_from_tree", "walk_samples",
]
