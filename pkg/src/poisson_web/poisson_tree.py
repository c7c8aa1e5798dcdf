"""The mother operator, ancestry trees and the rescaled X / Y path families.

A point ``x`` looks for its mother in the strip ``|x1' - x1| <= r`` above it;
the mother is the lowest point of the field strictly later than ``x2`` (ties in
time go to the smaller ``x1``). Following mothers from a vertex gives its
ancestry chain, and interpolating the chain gives the web path ``X^s``.

Trees are built on finite fields. A field only determines mothers for points
whose strip fits inside it; :func:`tracking_margin` sizes the horizontal
margin that keeps tracked paths away from the edge, and
:func:`check_escape` flags paths that reach it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from poisson_web.errors import BoundaryEscape, HorizonExhausted, ParameterError
from poisson_web.path_space import PlanarPath
from poisson_web.point_field import PointSet, Window, extend_upward, query_strip, sample_poisson

X_FAMILY = "X"
Y_FAMILY = "Y"

LAMBDA_0 = math.sqrt(3.0) / 6.0
R_0 = math.sqrt(3.0)


@dataclass(frozen=True)
class ScalingParams:
    """Field parameters of one member of the X or Y family.

    X-family trees are built with ``(LAMBDA_0, R_0)`` and their paths are mapped
    by ``(x1, x2) -> (delta * x1, delta**2 * x2)``; Y-family trees use
    ``lam = 1 / delta`` and ``r = (3 * delta / 2) ** (1 / 3)`` and are not rescaled.
    """

    family: str
    delta: float
    lam: float
    r: float

    def __post_init__(self):
        if self.family not in (X_FAMILY, Y_FAMILY):
            raise ParameterError(f"unknown family {self.family!r}")
        if not 0 < self.delta <= 1:
            raise ParameterError(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def space_scale(self) -> float:
        return self.delta if self.family == X_FAMILY else 1.0

    @property
    def time_scale(self) -> float:
        return self.delta**2 if self.family == X_FAMILY else 1.0

    @property
    def diffusion(self) -> float:
        """Variance rate ``2 lam r^3 / 3`` of a single walk in tree (unscaled) units."""
        return 2.0 * self.lam * self.r**3 / 3.0

    def unscale_point(self, x) -> tuple[float, float]:
        """Web coordinates to tree coordinates."""
        return (x[0] / self.space_scale, x[1] / self.time_scale)

    def unscale_time(self, t: float) -> float:
        return t / self.time_scale

    def to_web(self, path: PlanarPath) -> PlanarPath:
        return rescale_path(path, self.delta) if self.family == X_FAMILY else path


def make_params(family: str, delta: float) -> ScalingParams:
    if not 0 < delta <= 1:
        raise ParameterError(f"delta must lie in (0, 1], got {delta}")
    if family == X_FAMILY:
        return ScalingParams(X_FAMILY, delta, LAMBDA_0, R_0)
    if family == Y_FAMILY:
        return ScalingParams(Y_FAMILY, delta, 1.0 / delta, (1.5 * delta) ** (1.0 / 3.0))
    raise ParameterError(f"unknown family {family!r}")


def rescale_path(p: PlanarPath, delta: float) -> PlanarPath:
    """Diffusive rescaling: time by ``delta**2``, space by ``delta``."""
    if not 0 < delta <= 1:
        raise ParameterError(f"delta must lie in (0, 1], got {delta}")
    return PlanarPath(p.knots * np.array([delta**2, delta]))


def mother(x, ps: PointSet, r: float) -> np.ndarray:
    """Lowest point of ``ps`` other than ``x`` in the strip above ``x``."""
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    x1, x2 = float(x[0]), float(x[1])
    if x2 >= ps.window.y_max:
        raise HorizonExhausted(f"point at time {x2} is at or above the field top {ps.window.y_max}")
    cand = query_strip(ps, x1, r, x2, ps.window.y_max)
    cand = cand[cand[:, 1] > x2]
    if len(cand) == 0:
        raise HorizonExhausted(f"no mother for ({x1}, {x2}) below {ps.window.y_max}")
    return cand[0]


def _mothers(points: np.ndarray, r: float, query: np.ndarray) -> np.ndarray:
    """Mother index of each ``points[query]`` (``-1`` when the field has none).

    Points are bucketed into columns of width ``r`` and sorted by (time, space)
    inside a column; a query scans the three columns that can hold its strip,
    starting just above its own time, and keeps the lexicographically lowest hit.
    """
    out = np.full(len(query), -1, dtype=np.int64)
    if len(points) == 0 or len(query) == 0:
        return out
    x, y = points[:, 0], points[:, 1]
    col = np.floor((x - x.min()) / r).astype(np.int64)
    order = np.lexsort((x, y, col))
    scol, sx, sy = col[order], x[order], y[order]
    n_cols = int(col.max()) + 1
    starts = np.searchsorted(scol, np.arange(n_cols + 1))

    best_y = np.full(len(query), np.inf)
    best_x = np.full(len(query), np.inf)
    best = np.full(len(query), -1, dtype=np.int64)
    qx, qy, qcol = x[query], y[query], col[query]
    for dc in (-1, 0, 1):
        c = qcol + dc
        slot = np.flatnonzero((c >= 0) & (c < n_cols))
        c = c[slot]
        ptr = np.empty(len(slot), dtype=np.int64)
        for cc in np.unique(c):
            sel = c == cc
            lo, hi = starts[cc], starts[cc + 1]
            ptr[sel] = lo + np.searchsorted(sy[lo:hi], qy[slot[sel]], side="right")
        end = starts[c + 1]
        while len(slot):
            live = ptr < end
            slot, ptr, end = slot[live], ptr[live], end[live]
            if not len(slot):
                break
            hit = np.abs(sx[ptr] - qx[slot]) <= r
            s, p = slot[hit], ptr[hit]
            better = (sy[p] < best_y[s]) | ((sy[p] == best_y[s]) & (sx[p] < best_x[s]))
            s, p = s[better], p[better]
            best_y[s], best_x[s], best[s] = sy[p], sx[p], p
            slot, ptr, end = slot[~hit], ptr[~hit] + 1, end[~hit]
    found = best >= 0
    out[found] = order[best[found]]
    return out


class AncestryTree:
    """Mother map over a :class:`PointSet`.

    ``parent[i]`` is the index of the mother of ``points[i]``, or ``-1`` for
    points at or above ``horizon`` (not resolved).
    """

    def __init__(self, base: PointSet, r: float, parent: np.ndarray, horizon: float):
        self.base = base
        self.r = float(r)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.horizon = float(horizon)
        self._lookup = None
        self._check()

    def _check(self):
        p = self.parent
        res = np.flatnonzero(p >= 0)
        pts = self.points
        if np.any(pts[p[res], 1] <= pts[res, 1]):
            raise AssertionError("mother not strictly later than daughter")
        if np.any(np.abs(pts[p[res], 0] - pts[res, 0]) > self.r):
            raise AssertionError("mother outside the strip")

    @property
    def points(self) -> np.ndarray:
        return self.base.points

    @property
    def resolved(self) -> bool:
        """Whether every point born before the horizon has its mother."""
        below = self.points[:, 1] < self.horizon
        return bool(np.all(self.parent[below] >= 0))

    def __len__(self):
        return len(self.points)

    def index_of(self, point) -> int | None:
        """Vertex index of an exact coordinate pair, or ``None``."""
        if self._lookup is None:
            self._lookup = {(float(a), float(b)): i for i, (a, b) in enumerate(self.points)}
        return self._lookup.get((float(point[0]), float(point[1])))

    def edges(self) -> np.ndarray:
        """``(k, 4)`` array of ``child_x, child_y, parent_x, parent_y`` rows."""
        res = np.flatnonzero(self.parent >= 0)
        return np.hstack((self.points[res], self.points[self.parent[res]]))

    def ancestor_at(self, idx, level: float) -> np.ndarray:
        """For each vertex in ``idx`` (born by ``level``), its last ancestor with time ``<= level``."""
        cur = np.array(idx, dtype=np.int64)
        y = self.points[:, 1]
        if np.any(y[cur] > level):
            raise ParameterError("vertex born after the requested level")
        active = np.arange(len(cur))
        while len(active):
            par = self.parent[cur[active]]
            if np.any(par < 0):
                raise HorizonExhausted(f"ancestry unresolved below level {level}")
            move = y[par] <= level
            cur[active[move]] = par[move]
            active = active[move]
        return cur

    def chain(self, i: int, horizon: float) -> list[int]:
        """Vertex ``i`` and its ancestors up to and including the first one past ``horizon``."""
        out = [int(i)]
        y = self.points[:, 1]
        while y[out[-1]] < horizon:
            p = self.parent[out[-1]]
            if p < 0:
                raise HorizonExhausted(f"ancestry of vertex {i} unresolved before {horizon}")
            out.append(int(p))
        return out


def build_tree(ps: PointSet, r: float, horizon: float) -> AncestryTree:
    """Resolve the mother of every point born before ``horizon`` whose mother lies in the field.

    The field is taken to be exactly the points of ``ps``; points whose strip
    holds no later point keep ``parent = -1`` and raise
    :class:`HorizonExhausted` only when an ancestry query reaches them.
    """
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    if horizon > ps.window.y_max:
        raise ParameterError(f"horizon {horizon} above the field top {ps.window.y_max}")
    query = np.flatnonzero(ps.points[:, 1] < horizon)
    parent = np.full(len(ps), -1, dtype=np.int64)
    parent[query] = _mothers(ps.points, r, query)
    return AncestryTree(ps, r, parent, horizon)


def slab_height(lam: float, r: float) -> float:
    """Upward extension step: about four mean waiting times of a single walk."""
    return 4.0 / (2.0 * r * lam)


def grow_tree(ps: PointSet, r: float, horizon: float, seed: int | None = None,
              max_slabs: int = 1000) -> AncestryTree:
    """:func:`build_tree`, extending the field upward slab by slab until it resolves."""
    step = slab_height(ps.intensity, r)
    if ps.window.y_max < horizon:
        ps = extend_upward(ps, horizon + step, seed)
    for _ in range(max_slabs):
        tree = build_tree(ps, r, horizon)
        if tree.resolved:
            return tree
        ps = extend_upward(ps, ps.window.y_max + step, seed)
    raise HorizonExhausted(f"tree unresolved after {max_slabs} extensions")


def _chain_path(tree: AncestryTree, first, chain: list[int], horizon: float) -> PlanarPath:
    pts = tree.points
    knots = [(float(first[1]), float(first[0]))]
    for i in chain:
        t, x = float(pts[i, 1]), float(pts[i, 0])
        if t > horizon:
            t_prev, x_prev = knots[-1]
            knots.append((horizon, x_prev + (x - x_prev) * (horizon - t_prev) / (t - t_prev)))
            break
        knots.append((t, x))
    if knots[-1][0] == knots[0][0] and len(knots) > 1:
        knots = knots[:1]
    return PlanarPath(np.array(knots))


def extract_path(s, tree: AncestryTree, horizon: float | None = None) -> PlanarPath:
    """Interpolated ancestry path of vertex ``s`` (index or coordinates), cut at ``horizon``."""
    horizon = tree.horizon if horizon is None else float(horizon)
    i = s if isinstance(s, (int, np.integer)) else tree.index_of(s)
    if i is None:
        raise ParameterError(f"{s} is not a vertex of the tree")
    chain = tree.chain(i, horizon)
    return _chain_path(tree, tree.points[i], chain[1:], horizon)


def interpolated_walk(x, tree: AncestryTree, horizon: float | None = None) -> PlanarPath:
    """Interpolated walk from an arbitrary space-time point ``x``: ``x``, ``mother(x)``, ..."""
    horizon = tree.horizon if horizon is None else float(horizon)
    i = tree.index_of(x)
    if i is not None:
        return extract_path(i, tree, horizon)
    if x[1] >= horizon:
        return PlanarPath([[x[1], x[0]]])
    m = tree.index_of(mother(x, tree.base, tree.r))
    return _chain_path(tree, x, tree.chain(m, horizon), horizon)


def snap_path(x, tree: AncestryTree, params: ScalingParams, horizon: float | None = None) -> PlanarPath:
    """Web path attached to a web-coordinate point ``x``.

    If the unscaled point is a vertex, its own path; otherwise the path of its
    mother. ``horizon`` is in web time and defaults to the tree horizon.
    """
    xu = params.unscale_point(x)
    h = tree.horizon if horizon is None else params.unscale_time(horizon)
    i = tree.index_of(xu)
    if i is None:
        i = tree.index_of(mother(xu, tree.base, tree.r))
    return params.to_web(extract_path(i, tree, h))


def tracking_margin(lam: float, r: float, duration: float) -> float:
    """Horizontal safety margin for paths tracked over ``duration`` (tree units).

    One jump of slack plus six diffusive standard deviations,
    ``r + 6 * sqrt(2 lam r^3 / 3 * duration)``.
    """
    return r + 6.0 * math.sqrt(2.0 * lam * r**3 / 3.0 * duration)


def tracking_field(lam: float, r: float, x_lo: float, x_hi: float, t_lo: float, t_hi: float,
                   seed: int) -> PointSet:
    """Field sized so paths tracked in ``[x_lo, x_hi]`` over ``[t_lo, t_hi]`` keep their strips inside it."""
    m = tracking_margin(lam, r, t_hi - t_lo) + r
    top = t_hi + slab_height(lam, r)
    return sample_poisson(Window(x_lo - m, x_hi + m, t_lo, top), lam, seed, cell=r)


def check_escape(path: PlanarPath, tree: AncestryTree):
    """Raise :class:`BoundaryEscape` if a knot's strip leaves the sampled window."""
    w = tree.base.window
    x = path.values
    if np.any(x - tree.r < w.x_min) or np.any(x + tree.r > w.x_max):
        raise BoundaryEscape("path strip reached the horizontal edge of the field")


def write_tree_edges(tree: AncestryTree, fh):
    """Write one ``child_x,child_y,parent_x,parent_y`` line per resolved edge."""
    for row in tree.edges():
        fh.write(",".join(format(v, ".17g") for v in row) + "\n")
