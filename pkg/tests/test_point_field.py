import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from poisson_web.errors import ParameterError
from poisson_web.point_field import PointSet, Window, extend_upward, query_strip, sample_poisson

from conftest import brute_strip


def test_degenerate_window_rejected():
    with pytest.raises(ParameterError):
        Window(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        Window(0.0, 1.0, 2.0, 2.0)


def test_nonpositive_intensity_rejected():
    with pytest.raises(ParameterError):
        sample_poisson(Window(0, 1, 0, 1), 0.0, seed=1)


def test_sample_is_deterministic():
    w = Window(0, 10, 0, 10)
    a, b = sample_poisson(w, 1.0, seed=7), sample_poisson(w, 1.0, seed=7)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample_poisson(w, 1.0, seed=8).points)


def test_mean_count_clt_band():
    # Poisson(100) counts over 1000 seeds: mean within 3 * 10 / sqrt(1000) of 100
    counts = [len(sample_poisson(Window(0, 10, 0, 10), 1.0, seed=s)) for s in range(1000)]
    assert abs(np.mean(counts) - 100) <= 3 * 10 / np.sqrt(1000)


def test_region_counts_chi_square():
    w = Window(0, 4, 0, 4)
    sub = Window(0, 2, 0, 1)
    counts = np.array([len(sample_poisson(w, 2.0, seed=s).restrict(sub)) for s in range(4000)])
    mu = 2.0 * sub.area
    edges = np.arange(0, 12)
    obs = np.array([np.sum(counts == k) for k in edges[:-1]] + [np.sum(counts >= edges[-1])])
    probs = np.append(stats.poisson.pmf(edges[:-1], mu), stats.poisson.sf(edges[-1] - 1, mu))
    assert stats.chisquare(obs, probs * len(counts)).pvalue > 0.01


def test_disjoint_regions_uncorrelated():
    w = Window(0, 2, 0, 2)
    left, right = Window(0, 1, 0, 2), Window(1.0000001, 2, 0, 2)
    pairs = np.array([(len(ps.restrict(left)), len(ps.restrict(right)))
                      for ps in (sample_poisson(w, 3.0, seed=s) for s in range(10_000))])
    corr = np.corrcoef(pairs.T)[0, 1]
    assert abs(corr) <= 3 / np.sqrt(len(pairs))


def test_points_inside_window_and_unique():
    ps = sample_poisson(Window(-3, 2, 1, 4), 5.0, seed=3)
    assert ps.window.contains(ps.points).all()
    assert len(np.unique(ps.points, axis=0)) == len(ps)


def test_extend_restricts_to_original():
    ps = sample_poisson(Window(0, 5, 0, 5), 1.0, seed=11)
    ext = extend_upward(ps, 9.0)
    assert ext.window.y_max == 9.0
    assert np.array_equal(ext.restrict(ps.window), ps.points[np.lexsort((ps.points[:, 0], ps.points[:, 1]))]
                          ) or np.array_equal(ext.points[:len(ps)], ps.points)
    assert np.all(ext.points[len(ps):, 1] > 5.0)


def test_extend_requires_higher_top():
    ps = sample_poisson(Window(0, 1, 0, 1), 1.0, seed=1)
    with pytest.raises(ParameterError):
        extend_upward(ps, 1.0)


def test_extend_is_deterministic():
    ps = sample_poisson(Window(0, 5, 0, 5), 1.0, seed=11)
    assert np.array_equal(extend_upward(ps, 8.0).points, extend_upward(ps, 8.0).points)


def test_extension_count_is_poisson():
    counts = []
    for s in range(3000):
        ps = sample_poisson(Window(0, 2, 0, 1), 1.5, seed=s)
        counts.append(len(extend_upward(ps, 3.0)) - len(ps))
    counts = np.array(counts)
    mu = 1.5 * 2 * 2
    assert abs(counts.mean() - mu) <= 3 * np.sqrt(mu / len(counts))
    assert abs(counts.var() - mu) <= 0.1 * mu


def test_two_extensions_match_one_in_distribution():
    one, two = [], []
    for s in range(3000):
        ps = sample_poisson(Window(0, 2, 0, 1), 1.0, seed=s)
        one.append(len(extend_upward(ps, 3.0)) - len(ps))
        two.append(len(extend_upward(extend_upward(ps, 2.0), 3.0)) - len(ps))
    assert stats.ks_2samp(one, two, method="asymp").pvalue > 0.01


def test_query_strip_empty_set():
    ps = PointSet(np.empty((0, 2)), Window(0, 1, 0, 1), 1.0)
    assert query_strip(ps, 0.5, 1.0, 0.0, 1.0).shape == (0, 2)


def test_query_strip_hand_built(five_points):
    got = query_strip(five_points, 0.2, 0.4, 0.0, 5.0)
    assert np.array_equal(got, np.array([[0.0, 1.0], [0.5, 2.0]]))


def test_query_strip_whole_window(five_points):
    got = query_strip(five_points, 0.0, 10.0, 0.0, 5.0)
    assert len(got) == len(five_points)
    assert np.all(np.diff(got[:, 1]) >= 0)


def test_query_strip_ties_sorted_by_x():
    ps = PointSet([(0.5, 1.0), (-0.5, 1.0), (0.0, 0.5)], Window(-1, 1, 0, 2), 1.0)
    assert np.array_equal(query_strip(ps, 0.0, 1.0, 0.0, 2.0),
                          np.array([[0.0, 0.5], [-0.5, 1.0], [0.5, 1.0]]))


def test_query_strip_bad_arguments(five_points):
    with pytest.raises(ParameterError):
        query_strip(five_points, 0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        query_strip(five_points, 0.0, 1.0, 2.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(0.5, 20), cell=st.floats(0.05, 3),
       xc=st.floats(-1, 6), r=st.floats(0.01, 4), y0=st.floats(-1, 5), span=st.floats(0, 6))
def test_query_strip_matches_brute_force(seed, lam, cell, xc, r, y0, span):
    ps = sample_poisson(Window(0, 5, 0, 4), lam, seed=seed, cell=cell)
    got = query_strip(ps, xc, r, y0, y0 + span)
    assert np.array_equal(got, brute_strip(ps.points, xc, r, y0, y0 + span))
