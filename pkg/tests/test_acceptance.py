"""Acceptance criteria 1-12, run at their stated sizes and tolerances.

Every experiment uses master seed 1. Each criterion records one PASS / FAIL
line, printed in the terminal summary (or on stdout when the module is run
directly).
"""
import numpy as np
import pytest

from poisson_web.harness.config import ExperimentConfig
from poisson_web.harness.experiments import run
from poisson_web.path_space import hausdorff, path_dist_d, sup_tolerance, PlanarPath
from poisson_web.point_field import PointSet, Window, query_strip, sample_poisson
from poisson_web.poisson_tree import build_tree

from conftest import brute_mother, brute_strip

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEED = 1
RESULTS: dict[int, str] = {}

_reports = {}


def report(experiment):
    if experiment not in _reports:
        _reports[experiment] = run(ExperimentConfig(experiment, seed=SEED))
    return _reports[experiment]


def _describe(row):
    where = ",".join(f"{k}={v}" for k, v in (("family", row.family), ("delta", row.delta),
                                             ("eps", row.epsilon), ("t", row.t)) if v not in ("", None))
    return f"{row.cell}[{where}]={row.estimate:.4g}"


def verdict(number, title, rows):
    assert rows, f"criterion {number}: no rows"
    ok = all(r.passed for r in rows)
    detail = "; ".join(_describe(r) for r in rows)
    RESULTS[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    return ok


def rule_rows(experiment, *rules, **match):
    rep = report(experiment)
    rows = [r for r in rep.ruled if r.rule in rules]
    return [r for r in rows if all(getattr(r, k) == v for k, v in match.items())]


def test_criterion_01_unit_diffusion():
    assert verdict(1, "unit diffusion, X and Y families",
                   rule_rows("donsker", "unit-diffusion"))


def test_criterion_02_donsker_marginal():
    assert verdict(2, "Donsker marginal KS at delta=0.1",
                   rule_rows("donsker", "donsker-ks", delta=0.1))


def test_criterion_03_gap_oracle():
    assert verdict(3, "joint-system gap vs difference process", rule_rows("delta-oracle", "gap-law-ks"))


def test_criterion_04_two_step_absorption():
    assert verdict(4, "two-step absorption closed form",
                   rule_rows("px-check", "two-step-absorption", "p-positive"))


def test_criterion_05_hitting_tail():
    assert verdict(5, "hitting-time tail slope", rule_rows("xi-tail", "hitting-tail"))


def test_criterion_06_coalescence_tail():
    assert verdict(6, "coalescence-time tail slope", rule_rows("coalescence-tail", "coalescence-tail"))


def test_criterion_07_fkg():
    assert verdict(7, "FKG over the event library", rule_rows("fkg", "fkg", "fkg-complement"))


def test_criterion_08_b1_limit():
    assert verdict(8, "eta-bar >= 2 limit and depth sensitivity",
                   rule_rows("b1", "b1-limit", "b1-depth"))


def test_criterion_09_b2_scaling():
    assert verdict(9, "P(eta-bar >= 3) / eps^2 within a factor 3", rule_rows("b2", "b2-ratio"))


def test_criterion_10_sandwich():
    rows = rule_rows("b1", "sandwich")
    assert all(r.n_replicas == 10_000 for r in rows)
    assert verdict(10, "eta-bar / eta sandwich, n = 2 and 3", rows)


def test_criterion_11_bm_reference():
    assert verdict(11, "coalescing-BM meeting time vs closed form",
                   rule_rows("i1-joint", "bm-reference-ks"))


def _oracle_suite():
    rng = np.random.default_rng(SEED)
    bad_strip = bad_tree = bad_haus = 0
    for i in range(1000):
        lam = rng.uniform(0.5, 10)
        ps = sample_poisson(Window(0, 5, 0, 4), lam, seed=i, cell=rng.uniform(0.05, 3))
        xc, r = rng.uniform(-1, 6), rng.uniform(0.01, 4)
        y0 = rng.uniform(-1, 5)
        y1 = y0 + rng.uniform(0, 6)
        if not np.array_equal(query_strip(ps, xc, r, y0, y1), brute_strip(ps.points, xc, r, y0, y1)):
            bad_strip += 1

        k = int(rng.integers(1, 11))
        pts = np.column_stack((rng.uniform(-3, 3, k), rng.uniform(0, 5, k)))
        r = rng.uniform(0.1, 3)
        small = PointSet(pts, Window(-3, 3, 0, 5), 1.0)
        tree = build_tree(small, r, 5.0)
        for j, p in enumerate(small.points):
            m = brute_mother(small.points, p, r)
            want = -1 if m is None else int(np.flatnonzero((small.points == m).all(axis=1))[0])
            if tree.parent[j] != want:
                bad_tree += 1
                break

        def random_path():
            n = int(rng.integers(1, 5))
            t = rng.uniform(-2, 2) + np.cumsum(np.r_[0, rng.uniform(0.1, 2, n - 1)])
            return PlanarPath(np.column_stack((t, rng.normal(0, 2, n))))

        K1 = [random_path() for _ in range(rng.integers(1, 6))]
        K2 = [random_path() for _ in range(rng.integers(1, 6))]
        fine = [[path_dist_d(a, b, subdivisions=2048) for b in K2] for a in K1]
        exhaustive = max(max(min(row) for row in fine),
                         max(min(fine[i][j] for i in range(len(K1))) for j in range(len(K2))))
        tau = max(sup_tolerance(a, b) for a in K1 for b in K2)
        if abs(hausdorff(K1, K2) - exhaustive) > tau:
            bad_haus += 1
    return bad_strip, bad_tree, bad_haus


def test_criterion_12_oracle_suite():
    bad = _oracle_suite()
    ok = bad == (0, 0, 0)
    RESULTS[12] = (f"criterion 12 {'PASS' if ok else 'FAIL'}  oracle suite (1000 cases each): "
                   f"query_strip mismatches={bad[0]}; build_tree mismatches={bad[1]}; "
                   f"hausdorff beyond tolerance={bad[2]}")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
