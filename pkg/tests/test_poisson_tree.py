import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_web.errors import BoundaryEscape, HorizonExhausted, ParameterError
from poisson_web.path_space import PlanarPath
from poisson_web.point_field import PointSet, Window, sample_poisson
from poisson_web.poisson_tree import (
    LAMBDA_0, R_0, AncestryTree, build_tree, check_escape, extract_path, grow_tree,
    interpolated_walk, make_params, mother, rescale_path, snap_path, tracking_field,
    write_tree_edges,
)

from conftest import brute_mother


def field(pts, w=Window(-5, 5, -1, 10)):
    return PointSet(pts, w, 1.0)


# mother

def test_mother_single_candidate():
    assert np.array_equal(mother((0, 0), field([(0, 1)]), 1.0), [0, 1])


def test_mother_earlier_time_wins():
    assert np.array_equal(mother((0, 0), field([(0.5, 2), (-0.9, 1)]), 1.0), [-0.9, 1])


def test_mother_strip_constraint():
    assert np.array_equal(mother((0, 0), field([(1.5, 0.5), (0.2, 3)]), 1.0), [0.2, 3])


def test_mother_strip_is_closed():
    assert np.array_equal(mother((0, 0), field([(1.0, 2.0), (0.0, 3.0)]), 1.0), [1.0, 2.0])


def test_mother_excludes_the_point_itself():
    assert np.array_equal(mother((0, 1), field([(0, 1), (0.3, 2)]), 1.0), [0.3, 2])


def test_mother_time_tie_goes_to_smaller_x():
    assert np.array_equal(mother((0, 0), field([(0.5, 1.0), (-0.5, 1.0)]), 1.0), [-0.5, 1.0])


def test_mother_horizon_exhausted():
    with pytest.raises(HorizonExhausted):
        mother((0, 0), field([(3.0, 1.0)]), 1.0)


def test_mother_rejects_bad_radius():
    with pytest.raises(ParameterError):
        mother((0, 0), field([(0, 1)]), 0.0)


# build_tree

def test_build_tree_empty():
    tree = build_tree(field(np.empty((0, 2))), 1.0, 5.0)
    assert len(tree.parent) == 0 and len(tree.edges()) == 0


def test_build_tree_hand_built():
    pts = [(0.0, 0.0), (0.8, 1.0), (-0.5, 2.0), (0.1, 3.0)]
    tree = build_tree(field(pts), 1.0, 3.0)
    # brute force: (0,0)->(0.8,1); (0.8,1)->(0.1,3) since (-0.5,2) is 1.3 away; (-0.5,2)->(0.1,3)
    assert tree.parent.tolist() == [1, 3, 3, -1]


def test_build_tree_horizon_above_field():
    with pytest.raises(ParameterError):
        build_tree(field([(0, 1)]), 1.0, 20.0)


def test_unresolved_chain_raises_on_query():
    tree = build_tree(field([(0.0, 0.0), (4.0, 1.0)]), 1.0, 5.0)
    assert not tree.resolved
    with pytest.raises(HorizonExhausted):
        extract_path(0, tree, 5.0)


def test_tree_invariants_on_random_field():
    ps = sample_poisson(Window(-10, 10, 0, 20), 1.0, seed=5, cell=1.0)
    tree = build_tree(ps, 1.0, 15.0)
    res = np.flatnonzero(tree.parent >= 0)
    pts = tree.points
    assert np.all(pts[tree.parent[res], 1] > pts[res, 1])
    assert np.all(np.abs(pts[tree.parent[res], 0] - pts[res, 0]) <= 1.0)


def test_tree_rejects_earlier_mother():
    ps = field([(0.0, 1.0), (0.0, 0.0)])
    with pytest.raises(AssertionError):
        AncestryTree(ps, 1.0, np.array([1, -1]), 2.0)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0, 5)), min_size=1, max_size=10, unique=True),
       st.floats(0.1, 3))
def test_build_tree_matches_brute_force(pts, r):
    ps = PointSet(pts, Window(-3, 3, 0, 5), 1.0)
    tree = build_tree(ps, r, 5.0)
    for i, p in enumerate(ps.points):
        m = brute_mother(ps.points, p, r)
        if p[1] >= 5.0 or m is None:
            assert tree.parent[i] == -1
        else:
            assert np.array_equal(ps.points[tree.parent[i]], m)


def test_grow_tree_resolves():
    ps = sample_poisson(Window(-5, 5, 0, 3), LAMBDA_0, seed=2, cell=R_0)
    tree = grow_tree(ps, R_0, 3.0, seed=9)
    assert tree.resolved
    assert tree.base.window.y_max > 3.0


# extract_path / snap_path

def test_extract_path_chain():
    pts = [(0.0, 0.0), (1.0, 2.0), (0.0, 5.0)]
    tree = build_tree(field(pts), 1.5, 5.0)
    p = extract_path(0, tree, 5.0)
    assert np.array_equal(p.knots, [[0, 0], [2, 1], [5, 0]])
    assert p(2.0) == 1.0 and p(1.0) == 0.5


def test_extract_path_by_coordinates():
    tree = build_tree(field([(0.0, 0.0), (1.0, 2.0), (0.0, 5.0)]), 1.5, 5.0)
    assert extract_path((1.0, 2.0), tree, 5.0) == extract_path(1, tree, 5.0)
    with pytest.raises(ParameterError):
        extract_path((9.0, 9.0), tree, 5.0)


def test_extract_path_truncated_at_horizon():
    tree = build_tree(field([(0.0, 0.0), (1.0, 2.0), (0.0, 6.0)]), 1.5, 5.0)
    p = extract_path(0, tree, 4.0)
    assert p.t_end == 4.0
    assert p(4.0) == pytest.approx(1.0 - 2.0 / 4.0)


def test_merged_paths_agree_after_merge():
    ps = sample_poisson(Window(-8, 8, 0, 12), 1.0, seed=4)
    tree = grow_tree(ps, 1.0, 10.0, seed=4)
    i, j = 0, 1
    ci, cj = tree.chain(i, 10.0), tree.chain(j, 10.0)
    common = [v for v in ci if v in set(cj)]
    if common:
        t = tree.points[common[0], 1]
        pi, pj = extract_path(i, tree, 10.0), extract_path(j, tree, 10.0)
        grid = np.linspace(t, 10.0, 50)
        assert np.array_equal(pi(grid), pj(grid))


def test_snap_path_vertex_and_non_vertex():
    pts = [(0.0, 0.0), (0.5, 1.0), (0.2, 3.0)]
    tree = build_tree(field(pts), 1.0, 3.0)
    p1 = make_params("Y", 2.0 / 3.0)  # r = 1, no rescaling
    assert snap_path((0.0, 0.0), tree, p1) == extract_path(0, tree)
    s = snap_path((0.1, 0.5), tree, p1)
    assert np.array_equal(s.knots[0], [1.0, 0.5])


def test_snap_path_rescales_x_family():
    pts = [(0.0, 0.0), (1.0, 1.0), (0.2, 3.0)]
    tree = build_tree(field(pts), R_0, 3.0)
    p = make_params("X", 0.5)
    s = snap_path((0.0, 0.0), tree, p, horizon=0.75)
    assert np.allclose(s.knots, [[0, 0], [0.25, 0.5], [0.75, 0.1]])


def test_interpolated_walk_off_vertex():
    tree = build_tree(field([(0.5, 1.0), (0.2, 3.0)]), 1.0, 3.0)
    w = interpolated_walk((0.0, 0.0), tree, 3.0)
    assert np.array_equal(w.knots, [[0, 0], [1, 0.5], [3, 0.2]])


# rescaling and parameters

def test_rescale_identity_and_arithmetic():
    p = PlanarPath([[4.0, 2.0], [8.0, 1.0]])
    assert rescale_path(p, 1.0) == p
    assert np.array_equal(rescale_path(p, 0.5).knots[0], [1.0, 1.0])


@given(st.floats(0.05, 1), st.floats(0.05, 1))
def test_rescale_composes(d1, d2):
    p = PlanarPath([[0.0, 1.0], [2.0, -3.0], [5.0, 0.5]])
    assert np.allclose(rescale_path(rescale_path(p, d1), d2).knots, rescale_path(p, d1 * d2).knots)


def test_rescale_rejects_bad_delta():
    with pytest.raises(ParameterError):
        rescale_path(PlanarPath([[0.0, 0.0]]), 1.5)


def test_make_params_values():
    y = make_params("Y", 0.1)
    assert y.lam == pytest.approx(10.0) and y.r == pytest.approx(0.15 ** (1 / 3))
    x = make_params("X", 0.3)
    assert x.lam == math.sqrt(3) / 6 and x.r == math.sqrt(3)
    assert make_params("Y", 2 / 3).r == pytest.approx(1.0)


@pytest.mark.parametrize("fam", ["X", "Y"])
@pytest.mark.parametrize("d", [0.01, 0.1, 0.5, 1.0])
def test_unit_diffusion_constant(fam, d):
    assert make_params(fam, d).diffusion == pytest.approx(1.0)


def test_make_params_rejects():
    with pytest.raises(ParameterError):
        make_params("Z", 0.1)
    with pytest.raises(ParameterError):
        make_params("X", 0.0)


# edges, margins, dump

def test_check_escape_flags_edge():
    tree = build_tree(field([(0.0, 0.0), (4.5, 1.0)]), 1.0, 0.5)
    check_escape(PlanarPath([[0.0, 0.0]]), tree)
    with pytest.raises(BoundaryEscape):
        check_escape(PlanarPath([[0.0, 0.0], [1.0, 4.5]]), tree)


def test_tracking_field_window():
    ps = tracking_field(1.0, 1.0, -1.0, 1.0, 0.0, 4.0, seed=3)
    assert ps.window.x_min < -1.0 - 6.0 and ps.window.y_max > 4.0


def test_write_tree_edges_round_trip():
    ps = sample_poisson(Window(-4, 4, 0, 6), 1.0, seed=1)
    tree = build_tree(ps, 1.0, 4.0)
    buf = io.StringIO()
    write_tree_edges(tree, buf)
    back = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",").reshape(-1, 4)
    assert np.array_equal(back, tree.edges())
