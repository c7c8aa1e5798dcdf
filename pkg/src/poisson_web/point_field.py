"""Homogeneous planar Poisson samples on finite windows.

Coordinates follow the convention ``(x1, x2) = (space, time)``. A
:class:`PointSet` is immutable; :func:`extend_upward` returns a new set whose
restriction to the old window is the old set.

Slab seeding
------------
The base sample is slab 0 and the k-th upward extension is slab k. Slab k of a
set with master seed ``s`` draws from ``SeedSequence(s, spawn_key=(k,))``, so
the field above a given height does not depend on how, or in which order,
queries forced it to be generated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from poisson_web.errors import ParameterError
from poisson_web.seeding import seed_sequence

# resample rounds before giving up on coordinate collisions (never reached in practice)
_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[x_min, x_max] x [y_min, y_max]`` (space x time)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(np.isfinite(v) for v in vals):
            raise ParameterError(f"window bounds must be finite, got {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(f"degenerate window {vals}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return (
            (p[:, 0] >= self.x_min)
            & (p[:, 0] <= self.x_max)
            & (p[:, 1] >= self.y_min)
            & (p[:, 1] <= self.y_max)
        )


class BucketGrid:
    """Uniform grid of ``cell_x`` by ``cell_y`` buckets over a window.

    Points are stored sorted by (column, row, x2, x1); ``start`` holds CSR
    offsets so the contents of cell ``(col, row)`` are
    ``order[start[col * n_rows + row]:start[col * n_rows + row + 1]]``.
    """

    def __init__(self, points: np.ndarray, window: Window, cell_x: float, cell_y: float):
        if cell_x <= 0 or cell_y <= 0:
            raise ParameterError("bucket sizes must be positive")
        self.window = window
        self.cell_x = float(cell_x)
        self.cell_y = float(cell_y)
        self.n_cols = max(1, int(np.ceil(window.width / cell_x)))
        self.n_rows = max(1, int(np.ceil(window.height / cell_y)))
        cols, rows = self._cells(points[:, 0], points[:, 1])
        keys = cols * self.n_rows + rows
        self.order = np.lexsort((points[:, 0], points[:, 1], keys))
        counts = np.bincount(keys, minlength=self.n_cols * self.n_rows)
        self.start = np.concatenate(([0], np.cumsum(counts)))

    def _cells(self, x, y):
        cols = np.floor((np.asarray(x) - self.window.x_min) / self.cell_x).astype(np.int64)
        rows = np.floor((np.asarray(y) - self.window.y_min) / self.cell_y).astype(np.int64)
        return np.clip(cols, 0, self.n_cols - 1), np.clip(rows, 0, self.n_rows - 1)

    def candidates(self, x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> np.ndarray:
        """Indices of all points in cells overlapping the rectangle (a superset of the hits)."""
        w = self.window
        if x_hi < w.x_min or x_lo > w.x_max or y_hi < w.y_min or y_lo > w.y_max:
            return np.empty(0, dtype=np.int64)
        (c0, c1), (r0, r1) = self._cells([x_lo, x_hi], [y_lo, y_hi])
        chunks = []
        for c in range(c0, c1 + 1):
            base = c * self.n_rows
            lo, hi = self.start[base + r0], self.start[base + r1 + 1]
            if hi > lo:
                chunks.append(self.order[lo:hi])
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(chunks)


class PointSet:
    """Finite realisation of a Poisson field of intensity ``intensity`` on ``window``.

    ``points`` is a read-only ``(n, 2)`` array of ``(x1, x2)`` rows. ``seed`` and
    ``n_slabs`` record where the next upward extension draws its randomness.
    """

    def __init__(
        self,
        points,
        window: Window,
        intensity: float,
        seed: int = 0,
        n_slabs: int = 1,
        cell: float = 1.0,
    ):
        if not intensity > 0:
            raise ParameterError(f"intensity must be positive, got {intensity}")
        pts = np.array(points, dtype=float).reshape(-1, 2)
        if pts.size and not window.contains(pts).all():
            raise ParameterError("all points must lie in the window")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ParameterError("duplicate points")
        pts.setflags(write=False)
        self.points = pts
        self.window = window
        self.intensity = float(intensity)
        self.seed = int(seed)
        self.n_slabs = int(n_slabs)
        self.cell = float(cell)
        self.index = BucketGrid(pts, window, cell, cell)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointSet(n={len(self)}, window={self.window}, intensity={self.intensity})"

    def with_cell(self, cell: float) -> "PointSet":
        """Same points re-indexed with ``cell`` x ``cell`` buckets."""
        if cell == self.cell:
            return self
        return PointSet(self.points, self.window, self.intensity, self.seed, self.n_slabs, cell)

    def restrict(self, window: Window) -> np.ndarray:
        """Points inside ``window``, in storage order."""
        return self.points[window.contains(self.points)]


def _uniform_points(rng, n, x_min, x_max, y_lo, y_hi, top_closed):
    x = x_min + (x_max - x_min) * rng.random(n)
    u = rng.random(n)
    # top_closed: slab (y_lo, y_hi] so it never overlaps the slab below
    y = y_hi - (y_hi - y_lo) * u if top_closed else y_lo + (y_hi - y_lo) * u
    return np.column_stack((x, y))


def _dedupe(pts, rng, existing, **box):
    """Resample rows colliding with an earlier row or with ``existing``."""
    for _ in range(_MAX_RESAMPLE):
        allpts = np.vstack((existing, pts)) if len(existing) else pts
        _, first = np.unique(allpts, axis=0, return_index=True)
        keep = np.zeros(len(allpts), dtype=bool)
        keep[first] = True
        bad = ~keep[len(existing):]
        if not bad.any():
            return pts
        pts[bad] = _uniform_points(rng, int(bad.sum()), **box)
    raise RuntimeError("could not resolve duplicate coordinates")


def _check_intensity(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise ParameterError(f"intensity must be positive, got {lam}")


def sample_poisson(window: Window, lam: float, seed: int, cell: float = 1.0) -> PointSet:
    """Homogeneous Poisson sample of intensity ``lam`` on ``window``.

    Deterministic in ``(window, lam, seed)``; ``cell`` only sets the bucket size
    of the index.
    """
    _check_intensity(lam)
    rng = np.random.default_rng(seed_sequence(seed, 0))
    n = rng.poisson(lam * window.area)
    box = dict(x_min=window.x_min, x_max=window.x_max, y_lo=window.y_min, y_hi=window.y_max,
               top_closed=False)
    pts = _dedupe(_uniform_points(rng, n, **box), rng, np.empty((0, 2)), **box)
    return PointSet(pts, window, lam, seed=seed, n_slabs=1, cell=cell)


def extend_upward(ps: PointSet, new_y_max: float, seed: int | None = None) -> PointSet:
    """Add an independent Poisson slab ``(y_max, new_y_max]`` on top of ``ps``.

    ``seed`` defaults to the master seed of ``ps``; the slab index is
    ``ps.n_slabs``.
    """
    w = ps.window
    if not new_y_max > w.y_max:
        raise ParameterError(f"new_y_max={new_y_max} does not exceed current y_max={w.y_max}")
    seed = ps.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed_sequence(seed, ps.n_slabs))
    n = rng.poisson(ps.intensity * w.width * (new_y_max - w.y_max))
    box = dict(x_min=w.x_min, x_max=w.x_max, y_lo=w.y_max, y_hi=new_y_max, top_closed=True)
    new = _dedupe(_uniform_points(rng, n, **box), rng, ps.points, **box)
    window = Window(w.x_min, w.x_max, w.y_min, new_y_max)
    return PointSet(np.vstack((ps.points, new)), window, ps.intensity, seed=seed,
                    n_slabs=ps.n_slabs + 1, cell=ps.cell)


def query_strip(ps: PointSet, x_center: float, r: float, y_from: float, y_to: float) -> np.ndarray:
    """Points with ``|x1 - x_center| <= r`` and ``y_from <= x2 <= y_to``.

    Returned as an ``(k, 2)`` array sorted by x2, ties by x1.
    """
    if not r > 0:
        raise ParameterError(f"strip half-width must be positive, got {r}")
    if y_from > y_to:
        raise ParameterError(f"y_from={y_from} > y_to={y_to}")
    idx = ps.index.candidates(x_center - r, x_center + r, y_from, y_to)
    p = ps.points[idx]
    hit = (np.abs(p[:, 0] - x_center) <= r) & (p[:, 1] >= y_from) & (p[:, 1] <= y_to)
    p = p[hit]
    return p[np.lexsort((p[:, 0], p[:, 1]))]
