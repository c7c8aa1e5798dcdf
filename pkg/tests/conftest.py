import numpy as np
import pytest

from poisson_web.point_field import PointSet, Window


def brute_strip(points, xc, r, y0, y1):
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    hit = (np.abs(p[:, 0] - xc) <= r) & (p[:, 1] >= y0) & (p[:, 1] <= y1)
    p = p[hit]
    return p[np.lexsort((p[:, 0], p[:, 1]))]


def brute_mother(points, x, r):
    """Lowest later point in the closed strip; ties to smaller x1. ``None`` if absent."""
    best = None
    for q in points:
        if abs(q[0] - x[0]) <= r and q[1] > x[1]:
            if best is None or (q[1], q[0]) < (best[1], best[0]):
                best = q
    return best


@pytest.fixture
def five_points():
    pts = [(0.0, 1.0), (0.5, 2.0), (3.0, 0.5), (-2.0, 3.0), (0.9, 0.2)]
    return PointSet(pts, Window(-5, 5, 0, 5), 1.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
