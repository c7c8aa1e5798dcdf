"""Compactified path space: the (Phi, Psi) embedding, path metrics and eta counts.

Paths are piecewise linear in time with an explicit starting time. Before the
start a path is frozen at its starting value; after its last knot it is held
constant. The second convention is ours (simulated paths are finite) and is
what every metric below assumes.

Sup evaluation
--------------
``path_dist_d`` takes the supremum of ``|Phi(f1(t), t) - Phi(f2(t), t)|`` on the
merged knot grid of both paths, with ``t = 0`` added, each segment refined by
``subdivisions`` equal steps. On a sub-step of width ``w`` where the two paths
have slopes ``s1, s2`` the integrand is Lipschitz with constant at most
``s1 + s2 + 2``, so the grid maximum under-reads the true supremum by at most
:func:`sup_tolerance`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from poisson_web.errors import DomainError, HorizonExhausted, ParameterError

SUBDIVISIONS = 16


@dataclass(frozen=True, eq=False)
class PlanarPath:
    """Piecewise-linear space-time path.

    ``knots`` is a ``(k, 2)`` array of ``(time, space)`` rows with strictly
    increasing times; the first time is the starting time ``t0``.
    """

    knots: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=float).reshape(-1, 2)
        if len(k) == 0:
            raise ParameterError("a path needs at least one knot")
        if np.any(np.diff(k[:, 0]) <= 0):
            raise ParameterError("knot times must be strictly increasing")
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)

    @classmethod
    def from_points(cls, points) -> "PlanarPath":
        """Build from ``(x1, x2) = (space, time)`` points, the tree's coordinate order."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(p[:, ::-1])

    @property
    def t0(self) -> float:
        return float(self.knots[0, 0])

    @property
    def t_end(self) -> float:
        return float(self.knots[-1, 0])

    @property
    def times(self) -> np.ndarray:
        return self.knots[:, 0]

    @property
    def values(self) -> np.ndarray:
        return self.knots[:, 1]

    def __call__(self, t):
        # np.interp clamps at both ends: exactly the frozen-start / constant-tail rule
        out = np.interp(t, self.knots[:, 0], self.knots[:, 1])
        return float(out) if np.ndim(out) == 0 else out

    def __len__(self):
        return len(self.knots)

    def __eq__(self, other):
        if not isinstance(other, PlanarPath):
            return NotImplemented
        return self.knots.shape == other.knots.shape and bool(np.all(self.knots == other.knots))

    def __hash__(self):
        return hash(self.knots.tobytes())


def embed(x1, x2):
    """Image of ``(x1, x2)`` under ``(tanh(x1) / (1 + |x2|), tanh(x2))``; infinities allowed."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    phi = np.tanh(x1) / (1.0 + np.abs(x2))
    psi = np.tanh(x2)
    if phi.ndim == 0:
        return float(phi), float(psi)
    return phi, psi


def rho(x, y) -> float:
    """Compactified distance between space-time points ``x = (x1, x2)`` and ``y``."""
    px, sx = embed(x[0], x[1])
    py, sy = embed(y[0], y[1])
    return max(abs(px - py), abs(sx - sy))


def _grid(times: np.ndarray, subdivisions: int) -> np.ndarray:
    t = np.unique(np.append(times, 0.0))
    if len(t) == 1:
        return t
    frac = np.arange(subdivisions) / subdivisions
    fine = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
    return np.append(fine, t[-1])


def path_dist_d(p1: PlanarPath, p2: PlanarPath, subdivisions: int = SUBDIVISIONS) -> float:
    """Path distance: sup of the embedded spatial gap, or the embedded start-time gap."""
    t = _grid(np.concatenate((p1.times, p2.times)), subdivisions)
    gap = np.abs(np.tanh(p1(t)) - np.tanh(p2(t))) / (1.0 + np.abs(t))
    return float(max(gap.max(), abs(np.tanh(p1.t0) - np.tanh(p2.t0))))


def sup_tolerance(p1: PlanarPath, p2: PlanarPath, subdivisions: int = SUBDIVISIONS) -> float:
    """Upper bound on how far the grid maximum of :func:`path_dist_d` can sit below the sup."""
    t = np.unique(np.append(np.concatenate((p1.times, p2.times)), 0.0))
    if len(t) == 1:
        return 0.0
    mid = 0.5 * (t[:-1] + t[1:])

    def slope(p):
        if len(p) == 1:
            return np.zeros_like(mid)
        s = np.abs(np.diff(p.values) / np.diff(p.times))
        k = np.searchsorted(p.times, mid) - 1
        inside = (k >= 0) & (k < len(s))
        return np.where(inside, s[np.clip(k, 0, len(s) - 1)], 0.0)

    lip = slope(p1) + slope(p2) + 2.0
    w = np.diff(t) / subdivisions
    return float(np.max(lip * w / 2.0))


def path_dist_dbar(p1: PlanarPath, p2: PlanarPath) -> float:
    """Uncompactified distance: sup of ``|f1 - f2|`` or the start-time gap.

    Both paths are piecewise linear on the merged knot grid, so the supremum is
    attained at a knot and this value is exact.
    """
    t = np.unique(np.concatenate((p1.times, p2.times)))
    return float(max(np.max(np.abs(p1(t) - p2(t))), abs(p1.t0 - p2.t0)))


def distance_matrix(K1: Sequence[PlanarPath], K2: Sequence[PlanarPath],
                    subdivisions: int = SUBDIVISIONS) -> np.ndarray:
    return np.array([[path_dist_d(g1, g2, subdivisions) for g2 in K2] for g1 in K1]).reshape(
        len(K1), len(K2)
    )


def hausdorff(K1: Sequence[PlanarPath], K2: Sequence[PlanarPath],
              subdivisions: int = SUBDIVISIONS) -> float:
    """Hausdorff distance between two finite path sets under :func:`path_dist_d`."""
    if len(K1) == 0 or len(K2) == 0:
        raise DomainError("hausdorff distance needs two non-empty path sets")
    D = distance_matrix(K1, K2, subdivisions)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def _distinct(values: np.ndarray, tol: float) -> int:
    if len(values) == 0:
        return 0
    v = np.sort(values)
    return int(1 + np.count_nonzero(np.diff(v) > tol))


def count_eta(K: Sequence[PlanarPath], t0: float, t: float, a: float, b: float,
              tol: float = 0.0) -> int:
    """Number of distinct positions at ``t0 + t`` of paths born by ``t0`` that sit in ``[a, b]`` at ``t0``.

    ``tol = 0`` compares positions exactly, which is right for walk and tree
    paths (coalesced paths share knots bit for bit). For independent continuous
    paths pass a small ``tol`` such as ``1e-9 * scale``.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    if not a < b:
        raise ParameterError(f"need a < b, got [{a}, {b}]")
    ends = []
    for p in K:
        if p.t0 > t0:
            continue
        x = p(t0)
        if a <= x <= b:
            if p.t_end < t0 + t:
                raise DomainError(f"path ends at {p.t_end}, before t0 + t = {t0 + t}")
            ends.append(p(t0 + t))
    return _distinct(np.asarray(ends, dtype=float), tol)


def count_eta_bar(tree, t0: float, t: float, a: float, b: float, depth: float) -> int:
    """Distinct step-walk positions at ``t0 + t`` over tree vertices born in ``[t0 - depth, t0]``
    whose walk sits in ``[a, b]`` at ``t0``.

    Distinctness is decided by vertex identity of the current ancestor, i.e. by
    exact coalescence class.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    if not a < b:
        raise ParameterError(f"need a < b, got [{a}, {b}]")
    pts = tree.points
    born = np.flatnonzero((pts[:, 1] >= t0 - depth) & (pts[:, 1] <= t0))
    if len(born) == 0:
        return 0
    try:
        at_t0 = tree.ancestor_at(born, t0)
        x0 = pts[at_t0, 0]
        keep = (x0 >= a) & (x0 <= b)
        if not keep.any():
            return 0
        at_end = tree.ancestor_at(at_t0[keep], t0 + t)
    except HorizonExhausted as exc:
        raise DomainError(f"tree not resolved through t0 + t = {t0 + t}") from exc
    return int(len(np.unique(at_end)))


def _web_values(tree, idx: np.ndarray, level: float):
    """Interpolated tree-path values at ``level`` for vertices ``idx`` born by then."""
    pts = tree.points
    v = tree.ancestor_at(idx, level)
    par = tree.parent[v]
    if np.any(par < 0):
        raise HorizonExhausted(f"ancestry unresolved at level {level}")
    y0, y1 = pts[v, 1], pts[par, 1]
    x0, x1 = pts[v, 0], pts[par, 0]
    return v, x0 + (x1 - x0) * (level - y0) / (y1 - y0)


def count_eta_web(tree, t0: float, t: float, a: float, b: float, depth: float) -> int:
    """:func:`count_eta` for the interpolated tree paths of vertices born in ``[t0 - depth, t0]``.

    Vectorised over vertices; equals ``count_eta`` applied to the extracted
    paths of the same vertices.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    if not a < b:
        raise ParameterError(f"need a < b, got [{a}, {b}]")
    pts = tree.points
    born = np.flatnonzero((pts[:, 1] >= t0 - depth) & (pts[:, 1] <= t0))
    if len(born) == 0:
        return 0
    try:
        v0, x0 = _web_values(tree, born, t0)
        keep = (x0 >= a) & (x0 <= b)
        if not keep.any():
            return 0
        _, x1 = _web_values(tree, v0[keep], t0 + t)
    except HorizonExhausted as exc:
        raise DomainError(f"tree not resolved through t0 + t = {t0 + t}") from exc
    return int(len(np.unique(x1)))
