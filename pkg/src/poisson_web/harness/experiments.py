"""Named experiments. Each takes an :class:`ExperimentConfig` and returns a report.

Parameters not given in the config fall back to the defaults below. Auxiliary
processes (gap, hitting, FKG) run directly in tree units with ``lam`` and
``r``; family experiments convert web quantities to tree units through
:class:`~poisson_web.poisson_tree.ScalingParams`.
"""
from __future__ import annotations

import math
import time

import numpy as np

from poisson_web import coalescing_walks as cw
from poisson_web.brownian_ref import b1_limit, bm_coalescence_times, coalescence_cdf, normal_cdf
from poisson_web.errors import BoundaryEscape, DomainError, HorizonExhausted, ParameterError
from poisson_web.harness.config import ExperimentConfig
from poisson_web.harness.report import ExperimentReport
from poisson_web.harness.stats import (
    empirical_survival,
    ks_statistic,
    proportion,
    tail_slope_from_sample,
    variance_and_stderr,
)
from poisson_web.path_space import count_eta_bar, count_eta_web, path_dist_d
from poisson_web.point_field import Window, sample_poisson
from poisson_web.poisson_tree import (
    check_escape,
    extract_path,
    grow_tree,
    interpolated_walk,
    make_params,
    slab_height,
    snap_path,
    tracking_field,
    tracking_margin,
    write_tree_edges,
)
from poisson_web.seeding import derive_seed

DEFAULTS = {
    "donsker": dict(family="both", delta=(0.4, 0.2, 0.1), t=4.0, replicas=10_000),
    "i1-joint": dict(family="X", delta=(0.005,), epsilon=(0.2,), t_max=5.0, h=1e-4,
                     replicas=10_000),
    "b1": dict(family="both", delta_X=(0.005,), delta_Y=(1e-6,), epsilon=(0.1, 0.2), t=1.0,
               replicas=10_000, sandwich_delta=0.5, sandwich_epsilon=4.0,
               sandwich_replicas=10_000),
    "b2": dict(family="both", delta_X=(0.01,), delta_Y=(1e-5,), epsilon=(0.4, 0.2, 0.1), t=1.0,
               replicas=100_000),
    "delta-oracle": dict(lam=1 / 3, r=1.0, times=(1.0, 5.0, 25.0), replicas=10_000),
    "xi-tail": dict(lam=1 / 3, r=1.0, gamma=1.0, t_max=1e5, replicas=100_000),
    "coalescence-tail": dict(lam=1 / 3, r=1.0, t_max=1.0001e4, replicas=100_000),
    "px-check": dict(r=1.0, xs=(1.0, 1.3, 1.7, 1.99), replicas=100_000),
    "fkg": dict(lam=1 / 3, r=1.0, replicas=100_000),
    "snap-distance": dict(family="X", delta=(0.4, 0.2, 0.1), t=0.5, replicas=200),
    "render": dict(family="X", delta=(1.0,), t=20.0, replicas=1),
}

# fixed tolerances of the rules
B1_TOL = 0.03
B2_FACTOR = 3.0
SLOPE_RANGE = (-0.6, -0.4)
KS_LEVEL = 0.01
I1_TOL = 0.03
FIT_TIMES = np.logspace(2, 4, 9)


def _opt(cfg: ExperimentConfig, name: str):
    v = getattr(cfg, name, None)
    return v if v is not None else DEFAULTS[cfg.experiment].get(name)


def _families(cfg) -> list[str]:
    fam = _opt(cfg, "family") or "X"
    return ["X", "Y"] if fam == "both" else [fam]


def _deltas(cfg, family) -> tuple[float, ...]:
    if cfg.delta is not None:
        return cfg.delta
    d = DEFAULTS[cfg.experiment]
    return d.get(f"delta_{family}", d.get("delta"))


def _t(cfg) -> float:
    return float(_opt(cfg, "t") or 1.0)


def _n(cfg) -> int:
    return int(_opt(cfg, "replicas"))


# ------------------------------------------------------------------ single walks


def donsker(cfg: ExperimentConfig, rep: ExperimentReport):
    """Unit diffusion of rescaled walks, and the normal marginal at time 1."""
    t, n = _t(cfg), _n(cfg)
    for fam in _families(cfg):
        deltas = _deltas(cfg, fam)
        for d in deltas:
            p = make_params(fam, d)
            val, _ = cw.walk_samples(p.lam, p.r, [p.unscale_time(t)], n,
                                     derive_seed(cfg.seed, "donsker", fam, repr(d)))
            x = val[:, 0] * p.space_scale
            v, se = variance_and_stderr(x)
            rep.add(cell="var_over_t", family=fam, delta=d, t=t, estimate=v / t, stderr=se / t,
                    target=1.0, rule="unit-diffusion", passed=abs(v / t - 1) <= 3 * se / t,
                    n_replicas=n)
        d = min(deltas)
        p = make_params(fam, d)
        val, _ = cw.walk_samples(p.lam, p.r, [p.unscale_time(1.0)], n,
                                 derive_seed(cfg.seed, "donsker-ks", fam, repr(d)))
        ks = ks_statistic(val[:, 0] * p.space_scale, normal_cdf)
        rep.add(cell="ks_pvalue", family=fam, delta=d, t=1.0, estimate=ks.pvalue,
                target=KS_LEVEL, rule="donsker-ks", passed=ks.pvalue > KS_LEVEL, n_replicas=n)
        rep.add(cell="ks_statistic", family=fam, delta=d, t=1.0, estimate=ks.statistic,
                n_replicas=n)


# ------------------------------------------------------------------ gap processes


def delta_oracle(cfg: ExperimentConfig, rep: ExperimentReport):
    """Gap of the joint two-walk system against the gap process, at several times."""
    lam, r, n = _opt(cfg, "lam"), _opt(cfg, "r"), _n(cfg)
    gamma = cfg.gamma if cfg.gamma is not None else 2 * r
    times = np.asarray(_opt(cfg, "times"), dtype=float)
    joint = cw.gap_samples(gamma, lam, r, times, n, derive_seed(cfg.seed, "joint"))
    proc, _ = cw.difference_values(cw.DELTA, gamma, r, lam, times, n,
                                   derive_seed(cfg.seed, "process"))
    for j, t in enumerate(times):
        ks = ks_statistic(joint[:, j], proc[:, j])
        rep.add(cell="ks_pvalue", t=float(t), estimate=ks.pvalue, target=KS_LEVEL,
                rule="gap-law-ks", passed=ks.pvalue > KS_LEVEL, n_replicas=n)
        rep.add(cell="ks_statistic", t=float(t), estimate=ks.statistic, n_replicas=n)
        rep.add(cell="absorbed_joint", t=float(t), estimate=float(np.mean(joint[:, j] == 0)),
                n_replicas=n)
        rep.add(cell="absorbed_process", t=float(t), estimate=float(np.mean(proc[:, j] == 0)),
                n_replicas=n)


def px_check(cfg: ExperimentConfig, rep: ExperimentReport):
    """Second-jump absorption of the uniform-rate gap chain against its closed form."""
    r, n = _opt(cfg, "r"), _n(cfg)
    for k, rel in enumerate(_opt(cfg, "xs")):
        x = rel * r
        p, se = cw.two_step_frequency(x, r, n, derive_seed(cfg.seed, "px", k))
        target = cw.p_two_step(x, r)
        rep.add(cell=f"x={rel:g}r", estimate=p, stderr=se, target=target,
                rule="two-step-absorption", passed=abs(p - target) <= 3 * se, n_replicas=n)
        rep.add(cell=f"x={rel:g}r:alt_closed_form", estimate=cw.p_two_step_stated(x, r))
        rep.add(cell=f"x={rel:g}r:alt_integral", estimate=cw.p_two_step_integral(x, r))
    pinf = cw.p_infimum(r)
    rep.add(cell="p_infimum", estimate=pinf, target=0.0, rule="p-positive", passed=pinf > 0)


def _tail_rows(rep, sample, n, t_max, prefix):
    fit = tail_slope_from_sample(sample, FIT_TIMES)
    surv = empirical_survival(sample, FIT_TIMES)
    for t, s in zip(FIT_TIMES, surv):
        rep.add(cell="survival", t=float(t), estimate=float(s),
                stderr=float(math.sqrt(s * (1 - s) / n)), n_replicas=n)
    lo, hi = SLOPE_RANGE
    rep.add(cell="slope", estimate=fit.slope, stderr=(fit.ci_high - fit.ci_low) / (2 * 1.96),
            target=-0.5, rule=prefix, passed=lo <= fit.slope <= hi, n_replicas=n)
    rep.add(cell="slope_ci_low", estimate=fit.ci_low, n_replicas=n)
    rep.add(cell="slope_ci_high", estimate=fit.ci_high, n_replicas=n)
    rep.add(cell="constant", estimate=math.exp(fit.intercept), n_replicas=n)
    cens = float(np.mean(np.isinf(sample)))
    rep.add(cell="censored_fraction", t=float(t_max), estimate=cens, n_replicas=n,
            n_failed=int(np.sum(np.isinf(sample))))


def xi_tail(cfg: ExperimentConfig, rep: ExperimentReport):
    """Power-law tail of the hitting time of the uniform-rate walk."""
    lam, r, n = _opt(cfg, "lam"), _opt(cfg, "r"), _n(cfg)
    gamma, t_max = _opt(cfg, "gamma"), _opt(cfg, "t_max")
    T = cw.hitting_times(gamma, r, lam, t_max, n, derive_seed(cfg.seed, "xi"))
    _tail_rows(rep, T, n, t_max, "hitting-tail")


def coalescence_tail(cfg: ExperimentConfig, rep: ExperimentReport):
    """Power-law tail of the meeting time of two walks started ``2r`` apart."""
    lam, r, n = _opt(cfg, "lam"), _opt(cfg, "r"), _n(cfg)
    gamma = cfg.gamma if cfg.gamma is not None else 2 * r
    t_max = _opt(cfg, "t_max")
    T = cw.coalescence_times(gamma, lam, r, t_max, n, derive_seed(cfg.seed, "coalescence"))
    _tail_rows(rep, T, n, t_max, "coalescence-tail")


def fkg(cfg: ExperimentConfig, rep: ExperimentReport):
    """Positive correlation of increasing path events (negative for a decreasing partner)."""
    lam, r, n = _opt(cfg, "lam"), _opt(cfg, "r"), _n(cfg)
    seed = derive_seed(cfg.seed, "fkg")
    for label, pairs, rule in (("inc", cw.FKG_LIBRARY, "fkg"),
                               ("dec", cw.FKG_COMPLEMENT_LIBRARY, "fkg-complement")):
        for k, est in enumerate(cw.fkg_estimates(pairs, lam, r, n, seed)):
            ok = est.covariance >= -3 * est.sigma if rule == "fkg" else est.covariance <= 3 * est.sigma
            rep.add(cell=f"{label}{k:02d}:p_ab_minus_pa_pb", estimate=est.covariance,
                    stderr=est.sigma, target=0.0, rule=rule, passed=bool(ok), n_replicas=n)
            rep.add(cell=f"{label}{k:02d}:p_ab", estimate=est.p_ab, n_replicas=n)
            rep.add(cell=f"{label}{k:02d}:pa_pb", estimate=est.product, n_replicas=n)


# ------------------------------------------------------------------ eta statistics


def _eta_bar(p, eps, t, depth_web, n, seed, k):
    a, b = 0.0, eps / p.space_scale
    return cw.eta_bar_samples(a, b, p.lam, p.r, p.unscale_time(t), p.unscale_time(depth_web), n,
                              seed, k=k)


def b1(cfg: ExperimentConfig, rep: ExperimentReport):
    """Two surviving crossings against the Brownian limit, with depth sensitivity and the sandwich check."""
    t, n = _t(cfg), _n(cfg)
    depth = cfg.depth if cfg.depth is not None else 10 * t
    for fam in _families(cfg):
        for d in _deltas(cfg, fam):
            p = make_params(fam, d)
            for eps in cfg.epsilon or DEFAULTS["b1"]["epsilon"]:
                seed = derive_seed(cfg.seed, "b1", fam, repr(d), repr(eps))
                s1 = _eta_bar(p, eps, t, depth, n, seed, 2)
                s2 = _eta_bar(p, eps, t, 2 * depth, n, seed, 2)
                est, se = proportion(s1.at_least(2))
                est2, _ = proportion(s2.at_least(2))
                target = b1_limit(eps, t)
                tol = max(B1_TOL, 3 * se)
                common = dict(family=fam, delta=d, epsilon=eps, t=t, n_replicas=n)
                rep.add(cell="p_eta_bar_ge_2", estimate=est, stderr=se, target=target,
                        rule="b1-limit", passed=abs(est - target) <= tol,
                        n_failed=int(s1.truncated.sum()), **common)
                rep.add(cell="depth_sensitivity", estimate=abs(est2 - est), target=0.0,
                        rule="b1-depth", passed=abs(est2 - est) <= tol,
                        n_failed=int(s2.truncated.sum()), **common)
                rep.add(cell="mean_crossings", estimate=float(s1.crossings.mean()), **common)
    sandwich(cfg, rep)


def _chain_touches_edge(tree, idx, level, x_lo, x_hi) -> bool:
    """True if an ancestry chain from ``idx`` up to ``level`` visits a vertex whose strip leaves the field."""
    pts = tree.points
    cur = np.asarray(idx, dtype=np.int64)
    while len(cur):
        x = pts[cur, 0]
        if np.any((x < x_lo) | (x > x_hi)):
            return True
        nxt = tree.parent[cur]
        cur = nxt[(nxt >= 0) & (pts[nxt, 1] <= level)]
    return False


def _sandwich_replica(p, a, b, t_tree, depth_tree, seed):
    """(eta_bar over [a, b], eta over [a - 2r, b + 2r]) on one tree field, tree units."""
    margin = tracking_margin(p.lam, p.r, depth_tree + t_tree) + 2 * p.r
    ps = sample_poisson(Window(a - margin, b + margin, -depth_tree,
                               t_tree + slab_height(p.lam, p.r)), p.lam, seed, cell=p.r)
    tree = grow_tree(ps, p.r, t_tree + 1e-9, derive_seed(seed, "grow"))
    pts = tree.points
    born = np.flatnonzero(pts[:, 1] <= 0)
    v0 = tree.ancestor_at(born, 0.0)
    par = tree.parent[v0]
    x0 = pts[v0, 0] + (pts[par, 0] - pts[v0, 0]) * (0 - pts[v0, 1]) / (pts[par, 1] - pts[v0, 1])
    wide = born[(x0 >= a - 2 * p.r) & (x0 <= b + 2 * p.r)]
    w = ps.window
    if _chain_touches_edge(tree, wide, t_tree, w.x_min + p.r, w.x_max - p.r):
        raise BoundaryEscape("a counted path runs next to the field edge")
    eb = count_eta_bar(tree, 0.0, t_tree, a, b, depth_tree)
    ew = count_eta_web(tree, 0.0, t_tree, a - 2 * p.r, b + 2 * p.r, depth_tree)
    return eb, ew


def sandwich(cfg: ExperimentConfig, rep: ExperimentReport):
    """Per-sample check: eta_bar over [a, b] at least n implies eta over [a - 2r, b + 2r] at least n."""
    d = _opt(cfg, "sandwich_delta")
    eps = _opt(cfg, "sandwich_epsilon")
    n = int(_opt(cfg, "sandwich_replicas"))
    t = _t(cfg)
    depth = cfg.depth if cfg.depth is not None else 10 * t
    p = make_params("X", d)
    a, b = 0.0, eps / p.space_scale
    t_tree, depth_tree = p.unscale_time(t), p.unscale_time(depth)
    viol = {2: 0, 3: 0}
    ge = {2: 0, 3: 0}
    failed = 0
    for i in range(n):
        try:
            res = _sandwich_replica(p, a, b, t_tree, depth_tree, derive_seed(cfg.seed, "sandwich", i))
        except (BoundaryEscape, DomainError, HorizonExhausted):
            res = None
        if res is None:
            failed += 1
            continue
        eb, ew = res
        for k in (2, 3):
            if eb >= k:
                ge[k] += 1
                viol[k] += int(ew < k)
    common = dict(family="X", delta=d, epsilon=eps, t=t, n_replicas=n, n_failed=failed)
    for k in (2, 3):
        rep.add(cell=f"violations_n{k}", estimate=float(viol[k]), target=0.0, rule="sandwich",
                passed=viol[k] == 0, **common)
        rep.add(cell=f"tree_p_eta_bar_ge_{k}", estimate=ge[k] / max(n - failed, 1), **common)


def b2(cfg: ExperimentConfig, rep: ExperimentReport):
    """Three surviving crossings: ``P(eta_bar >= 3) / eps^2`` should stay of constant order."""
    t, n = _t(cfg), _n(cfg)
    depth = cfg.depth if cfg.depth is not None else 10 * t
    for fam in _families(cfg):
        for d in _deltas(cfg, fam):
            p = make_params(fam, d)
            ratios = []
            for eps in cfg.epsilon or DEFAULTS["b2"]["epsilon"]:
                s = _eta_bar(p, eps, t, depth, n, derive_seed(cfg.seed, "b2", fam, repr(d), repr(eps)), 3)
                est, se = proportion(s.at_least(3))
                ratios.append(est / eps**2)
                rep.add(cell="p_eta_bar_ge_3_over_eps2", family=fam, delta=d, epsilon=eps, t=t,
                        estimate=est / eps**2, stderr=se / eps**2, n_replicas=n,
                        n_failed=int(s.truncated.sum()))
                rep.add(cell="p_eta_bar_ge_3", family=fam, delta=d, epsilon=eps, t=t,
                        estimate=est, stderr=se, n_replicas=n)
            spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
            rep.add(cell="ratio_spread", family=fam, delta=d, t=t, estimate=spread,
                    target=B2_FACTOR, rule="b2-ratio", passed=spread <= B2_FACTOR, n_replicas=n)


# ------------------------------------------------------------------ joint law and Brownian reference


def i1_joint(cfg: ExperimentConfig, rep: ExperimentReport):
    """Meeting time of two rescaled walks, and the coalescing-Brownian reference, against the closed form."""
    n = _n(cfg)
    t_max = _opt(cfg, "t_max")
    for fam in _families(cfg):
        for d in _deltas(cfg, fam):
            p = make_params(fam, d)
            for eps in cfg.epsilon or DEFAULTS["i1-joint"]["epsilon"]:
                T = cw.coalescence_times(eps / p.space_scale, p.lam, p.r, p.unscale_time(t_max), n,
                                         derive_seed(cfg.seed, "i1", fam, repr(d), repr(eps)))
                T = T * p.time_scale
                ks = ks_statistic(T, lambda s, e=eps: coalescence_cdf(s, e), censor=t_max)
                rep.add(cell="ks_statistic", family=fam, delta=d, epsilon=eps, t=t_max,
                        estimate=ks.statistic, target=I1_TOL, rule="i1-meeting",
                        passed=ks.statistic <= I1_TOL, n_replicas=n)
                rep.add(cell="ks_pvalue", family=fam, delta=d, epsilon=eps, t=t_max,
                        estimate=ks.pvalue, n_replicas=n)
    h = _opt(cfg, "h")
    for eps in cfg.epsilon or DEFAULTS["i1-joint"]["epsilon"]:
        T = bm_coalescence_times(eps, h, t_max, n, derive_seed(cfg.seed, "bm", repr(eps)))
        ks = ks_statistic(T, lambda s, e=eps: coalescence_cdf(s, e), censor=t_max)
        rep.add(cell="bm_ks_pvalue", epsilon=eps, t=t_max, estimate=ks.pvalue, target=KS_LEVEL,
                rule="bm-reference-ks", passed=ks.pvalue > KS_LEVEL, n_replicas=n,
                n_failed=int(np.isinf(T).sum()))
        rep.add(cell="bm_ks_statistic", epsilon=eps, t=t_max, estimate=ks.statistic, n_replicas=n)


# ------------------------------------------------------------------ tree geometry


def snap_distances(fam: str, d: float, t: float, n: int, seed: int):
    """Distances between the snapped path and the interpolated walk from the origin (web units)."""
    p = make_params(fam, d)
    T = p.unscale_time(t)
    out, failed = [], 0
    for i in range(n):
        ps = tracking_field(p.lam, p.r, 0.0, 0.0, 0.0, T, derive_seed(seed, i))
        try:
            tree = grow_tree(ps, p.r, T, derive_seed(seed, i, "grow"))
            walk = interpolated_walk((0.0, 0.0), tree, T)
            check_escape(walk, tree)
            snap = snap_path((0.0, 0.0), tree, p, t)
        except (BoundaryEscape, HorizonExhausted):
            failed += 1
            continue
        out.append(path_dist_d(snap, p.to_web(walk)))
    return np.array(out), failed


def snap_distance(cfg: ExperimentConfig, rep: ExperimentReport):
    """Median path distance between snapped and interpolated paths, decreasing in delta."""
    t, n = _t(cfg), _n(cfg)
    for fam in _families(cfg):
        deltas = sorted(_deltas(cfg, fam), reverse=True)
        medians = []
        for d in deltas:
            dist, failed = snap_distances(fam, d, t, n, derive_seed(cfg.seed, "snap", fam, repr(d)))
            med = float(np.median(dist))
            medians.append(med)
            rep.add(cell="median_d", family=fam, delta=d, t=t, estimate=med, n_replicas=n,
                    n_failed=failed)
        mono = all(a > b for a, b in zip(medians, medians[1:]))
        rep.add(cell="median_decreasing", family=fam, t=t, estimate=float(mono), target=1.0,
                rule="snap-monotone", passed=mono, n_replicas=n)


def render(cfg: ExperimentConfig, rep: ExperimentReport, out: str | None = None):
    """Dump one tree's edges and the interpolated paths of its early vertices (tree units)."""
    fam = _families(cfg)[0]
    d = _deltas(cfg, fam)[0]
    p = make_params(fam, d)
    T = float(_opt(cfg, "t"))
    half = 2 * math.sqrt(T) + 5 * p.r
    ps = sample_poisson(Window(-half, half, 0.0, T + slab_height(p.lam, p.r)), p.lam,
                        derive_seed(cfg.seed, "render"), cell=p.r)
    tree = grow_tree(ps, p.r, T, derive_seed(cfg.seed, "render", "grow"))
    starts = np.flatnonzero(tree.points[:, 1] < min(1.0, T / 4))
    if out:
        with open(f"{out}.edges.csv", "w", encoding="utf-8") as fh:
            write_tree_edges(tree, fh)
        with open(f"{out}.paths.csv", "w", encoding="utf-8") as fh:
            fh.write("path,time,space\n")
            for k, i in enumerate(starts):
                for tt, xx in extract_path(int(i), tree, T).knots:
                    fh.write(f"{k},{tt:.17g},{xx:.17g}\n")
    rep.add(cell="edges", family=fam, delta=d, t=T, estimate=float(len(tree.edges())), n_replicas=1)
    rep.add(cell="paths", family=fam, delta=d, t=T, estimate=float(len(starts)), n_replicas=1)


RUNNERS = {
    "donsker": donsker,
    "i1-joint": i1_joint,
    "b1": b1,
    "b2": b2,
    "delta-oracle": delta_oracle,
    "xi-tail": xi_tail,
    "coalescence-tail": coalescence_tail,
    "px-check": px_check,
    "fkg": fkg,
    "snap-distance": snap_distance,
    "render": render,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    """Run ``cfg.experiment``; the report body depends only on the config."""
    if cfg.experiment not in RUNNERS:
        raise ParameterError(f"unknown experiment {cfg.experiment!r}")
    rep = ExperimentReport(cfg.experiment, cfg.seed)
    start = time.perf_counter()
    if cfg.experiment == "render":
        render(cfg, rep, cfg.out)
    else:
        RUNNERS[cfg.experiment](cfg, rep)
    rep.runtime = time.perf_counter() - start
    return rep
