import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_web.errors import DomainError, ParameterError
from poisson_web.path_space import (
    PlanarPath, count_eta, count_eta_bar, count_eta_web, distance_matrix, embed, hausdorff,
    path_dist_d, path_dist_dbar, rho, sup_tolerance,
)
from poisson_web.point_field import PointSet, Window, sample_poisson
from poisson_web.poisson_tree import build_tree, extract_path, grow_tree

INF = math.inf


def const(a, t0=0.0, t1=10.0):
    return PlanarPath([[t0, a], [t1, a]])


paths = st.builds(
    lambda t0, steps: PlanarPath(np.column_stack((
        t0 + np.cumsum([0.0] + [s[0] for s in steps]), np.cumsum([0.0] + [s[1] for s in steps])))),
    st.floats(-3, 3), st.lists(st.tuples(st.floats(0.05, 2), st.floats(-2, 2)), max_size=5))


# PlanarPath

def test_path_rejects_non_increasing_times():
    with pytest.raises(ParameterError):
        PlanarPath([[0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ParameterError):
        PlanarPath(np.empty((0, 2)))


def test_path_frozen_before_start_and_constant_after():
    p = PlanarPath([[1.0, 2.0], [3.0, 4.0]])
    assert p(0.0) == 2.0 and p(10.0) == 4.0 and p(2.0) == 3.0


def test_from_points_swaps_coordinates():
    assert np.array_equal(PlanarPath.from_points([(5.0, 1.0), (6.0, 2.0)]).knots, [[1, 5], [2, 6]])


# embed / rho

def test_embed_examples():
    assert embed(0.0, 2.5) == (0.0, math.tanh(2.5))
    phi, psi = embed(1.0, 0.0)
    assert phi == pytest.approx(0.76159, abs=1e-5) and psi == 0.0
    assert embed(INF, 0.0) == (1.0, 0.0)
    assert embed(-INF, 3.0)[0] == -0.25


def test_rho_examples():
    assert rho((1.0, 2.0), (1.0, 2.0)) == 0.0
    assert rho((INF, 0.0), (-INF, 0.0)) == 2.0


@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), st.tuples(st.floats(-50, 50), st.floats(-50, 50)))
def test_rho_symmetric_and_injective(x, y):
    assert rho(x, y) == rho(y, x)
    if rho(x, y) == 0.0:
        # tanh saturates in double precision, so injectivity is checked on moderate inputs
        if max(abs(x[0]), abs(y[0]), abs(x[1]), abs(y[1])) < 15:
            assert x == y


# path_dist_d

def test_d_identical_is_zero():
    p = PlanarPath([[0.0, 1.0], [2.0, -1.0]])
    assert path_dist_d(p, p) == 0.0


@pytest.mark.parametrize("a", [0.3, 1.0, 2.5])
def test_d_constant_paths(a):
    assert path_dist_d(const(0.0), const(a)) == pytest.approx(math.tanh(a), abs=1e-15)


def test_d_start_time_clause():
    p1, p2 = PlanarPath([[0.5, 0.0], [3.0, 1.0]]), PlanarPath([[2.0, 0.0], [3.0, 1.0]])
    assert path_dist_d(p1, p2) >= abs(math.tanh(0.5) - math.tanh(2.0))


def test_d_bounded_by_dbar():
    rng = np.random.default_rng(0)
    for _ in range(200):
        k = rng.integers(1, 6, size=2)
        ps = [PlanarPath(np.column_stack((np.cumsum(rng.uniform(0.1, 1, n)) - 1,
                                          rng.normal(size=n)))) for n in k]
        assert path_dist_d(*ps) <= path_dist_dbar(*ps) + 1e-12


def test_dbar_examples():
    p = PlanarPath([[0.0, 1.0], [1.0, 2.0]])
    assert path_dist_dbar(p, p) == 0.0
    assert path_dist_dbar(const(0.0), const(3.0)) == 3.0


@settings(max_examples=150, deadline=None)
@given(paths, paths, paths)
def test_d_metric_axioms(p1, p2, p3):
    assert path_dist_d(p1, p2) == path_dist_d(p2, p1)
    tol = sup_tolerance(p1, p3) + sup_tolerance(p1, p2) + sup_tolerance(p2, p3)
    assert path_dist_d(p1, p3) <= path_dist_d(p1, p2) + path_dist_d(p2, p3) + tol


def test_sup_tolerance_bounds_grid_error():
    p1 = PlanarPath([[0.0, 0.0], [1.0, 3.0]])
    p2 = PlanarPath([[0.0, 0.0], [1.0, -3.0]])
    fine = path_dist_d(p1, p2, subdivisions=4096)
    assert fine - path_dist_d(p1, p2) <= sup_tolerance(p1, p2)


# hausdorff

def test_hausdorff_self_and_singletons():
    K = [const(0.0), const(1.0)]
    assert hausdorff(K, K) == 0.0
    assert hausdorff([const(0.0)], [const(1.0)]) == path_dist_d(const(0.0), const(1.0))


def test_hausdorff_empty_rejected():
    with pytest.raises(DomainError):
        hausdorff([], [const(0.0)])


@settings(max_examples=100, deadline=None)
@given(st.lists(paths, min_size=1, max_size=3), st.lists(paths, min_size=1, max_size=3))
def test_hausdorff_exhaustive(K1, K2):
    pairs = [[path_dist_d(a, b) for b in K2] for a in K1]
    directed1 = max(min(row) for row in pairs)
    directed2 = max(min(pairs[i][j] for i in range(len(K1))) for j in range(len(K2)))
    assert hausdorff(K1, K2) == max(directed1, directed2)
    assert hausdorff(K1, K2) == hausdorff(K2, K1)
    assert distance_matrix(K1, K2).shape == (len(K1), len(K2))


# count_eta

def test_count_eta_examples():
    single = [PlanarPath([[0.0, 0.5], [2.0, 0.7]])]
    assert count_eta(single, 0.0, 1.0, 0.0, 1.0) == 1
    merged = [PlanarPath([[0.0, 0.2], [0.5, 0.5], [2.0, 0.5]]),
              PlanarPath([[0.0, 0.8], [0.5, 0.5], [2.0, 0.5]])]
    assert count_eta(merged, 0.0, 1.0, 0.0, 1.0) == 1
    apart = [const(0.2), const(0.8)]
    assert count_eta(apart, 0.0, 1.0, 0.0, 1.0) == 2


def test_count_eta_ignores_late_and_outside():
    K = [PlanarPath([[0.5, 0.5], [3.0, 0.5]]), const(5.0)]
    assert count_eta(K, 0.0, 1.0, 0.0, 1.0) == 0


def test_count_eta_tolerance():
    K = [const(0.5), const(0.5 + 1e-12)]
    assert count_eta(K, 0.0, 1.0, 0.0, 1.0) == 2
    assert count_eta(K, 0.0, 1.0, 0.0, 1.0, tol=1e-9) == 1


def test_count_eta_rejects():
    with pytest.raises(ParameterError):
        count_eta([const(0.0)], 0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        count_eta([const(0.0)], 0.0, 1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        count_eta([PlanarPath([[0.0, 0.5], [0.5, 0.5]])], 0.0, 1.0, 0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), st.floats(0.01, 4), st.floats(0, 3), st.floats(0, 3))
def test_count_eta_monotone_in_interval(a, w, ea, eb):
    ps = sample_poisson(Window(-12, 12, 0, 14), 1.0, seed=3)
    tree = build_tree(ps, 1.0, 13.0)
    K = [extract_path(int(i), tree, 8.0) for i in np.flatnonzero(ps.points[:, 1] <= 2.0)]
    assert count_eta(K, 2.0, 5.0, a, a + w) <= count_eta(K, 2.0, 5.0, a - ea, a + w + eb)


# count_eta_bar / count_eta_web

@pytest.fixture(scope="module")
def tree():
    ps = sample_poisson(Window(-15, 15, -6, 8), 1.0, seed=21)
    return grow_tree(ps, 1.0, 8.0, seed=21)


def test_eta_bar_empty_window(tree):
    assert count_eta_bar(tree, -6.5, 1.0, 0.0, 1.0, depth=0.1) == 0


def test_eta_bar_single_class():
    pts = [(0.0, 0.0), (0.5, 0.1), (0.2, 1.0), (0.3, 5.0)]
    t = build_tree(PointSet(pts, Window(-3, 3, -1, 6), 1.0), 1.0, 5.5)
    assert count_eta_bar(t, 1.0, 2.0, -1.0, 1.0, depth=2.0) == 1


def test_eta_web_matches_count_eta(tree):
    for a in np.linspace(-4, 3, 8):
        born = np.flatnonzero((tree.points[:, 1] >= -5.0) & (tree.points[:, 1] <= 0.0))
        K = [extract_path(int(i), tree, 6.0) for i in born]
        assert count_eta_web(tree, 0.0, 4.0, a, a + 1.5, 5.0) == count_eta(K, 0.0, 4.0, a, a + 1.5)


def test_eta_bar_sandwich(tree):
    r = tree.r
    for a in np.linspace(-4, 3, 15):
        eb = count_eta_bar(tree, 0.0, 3.0, a, a + 1.0, 5.0)
        ew = count_eta_web(tree, 0.0, 3.0, a - 2 * r, a + 1.0 + 2 * r, 5.0)
        assert eb <= ew
