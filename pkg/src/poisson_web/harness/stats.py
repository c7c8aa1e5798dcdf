"""Statistical back ends: Kolmogorov-Smirnov tests and power-law tail fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from poisson_web.errors import DomainError, ParameterError
from poisson_web.seeding import generator


@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float

    def __iter__(self):
        return iter((self.statistic, self.pvalue))


def _sample(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if len(a) == 0:
        raise DomainError("KS test needs a non-empty sample")
    return a


def ks_statistic(sample, other, censor: float | None = None) -> KSResult:
    """Kolmogorov-Smirnov statistic with asymptotic p-value.

    ``other`` is a second sample or a distribution function. With ``censor``
    (one-sample form only) the supremum runs over ``t < censor`` and values at
    or beyond it, including ``inf``, count as censored; the p-value then
    comes from the Kolmogorov limit law, which is conservative for the
    restricted supremum.
    """
    x = _sample(sample)
    if callable(other):
        if censor is None:
            res = stats.kstest(x, other, method="asymp")
            return KSResult(float(res.statistic), float(res.pvalue))
        return _ks_censored(x, other, float(censor))
    if censor is not None:
        raise ParameterError("censoring is only supported against a distribution function")
    y = _sample(other)
    res = stats.ks_2samp(x, y, method="asymp")
    return KSResult(float(res.statistic), float(res.pvalue))


def _ks_censored(x: np.ndarray, cdf: Callable, c: float) -> KSResult:
    n = len(x)
    obs = np.sort(x[x < c])
    m = len(obs)
    if m:
        F = np.asarray(cdf(obs), dtype=float)
        i = np.arange(1, m + 1)
        d = max(np.max(i / n - F), np.max(F - (i - 1) / n))
    else:
        d = 0.0
    # left limit at the censoring point
    d = max(d, abs(m / n - float(cdf(c))))
    return KSResult(float(d), float(stats.kstwobign.sf(math.sqrt(n) * d)))


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float

    @property
    def ci(self) -> tuple[float, float]:
        return self.ci_low, self.ci_high


def _check_tail_points(ts, surv):
    if ts.shape != surv.shape or ts.ndim != 1:
        raise ParameterError("times and survival values must be equal-length 1-d arrays")
    if len(ts) < 5:
        raise ParameterError(f"need at least 5 points, got {len(ts)}")
    if np.any(ts <= 0) or np.any(surv <= 0):
        raise ParameterError("times and survival values must be strictly positive")
    if ts.max() / ts.min() < 100 * (1 - 1e-12):
        raise ParameterError("fitted times must span at least two decades")


def tail_slope(ts, survival, n_boot: int = 2000, seed: int = 0, level: float = 0.95) -> TailFit:
    """Least-squares slope of ``log survival`` on ``log t`` with a pairs-bootstrap interval."""
    ts = np.asarray(ts, dtype=float)
    surv = np.asarray(survival, dtype=float)
    _check_tail_points(ts, surv)
    lx, ly = np.log(ts), np.log(surv)
    slope, intercept = np.polyfit(lx, ly, 1)
    rng = generator(seed, "tail_slope")
    boot = []
    for _ in range(n_boot):
        idx = rng.integers(0, len(ts), len(ts))
        if np.ptp(lx[idx]) == 0:
            continue
        boot.append(np.polyfit(lx[idx], ly[idx], 1)[0])
    lo, hi = np.quantile(boot, [(1 - level) / 2, (1 + level) / 2])
    return TailFit(float(slope), float(intercept), float(lo), float(hi))


def empirical_survival(sample, ts) -> np.ndarray:
    """``P(T > t)`` at each ``t`` from a sample (``inf`` entries count as survivors)."""
    x = np.sort(np.asarray(sample, dtype=float))
    return 1.0 - np.searchsorted(x, np.asarray(ts, dtype=float), side="right") / len(x)


def tail_slope_from_sample(sample, ts, n_boot: int = 500, seed: int = 0,
                           level: float = 0.95) -> TailFit:
    """Tail fit of a sample's survival curve; the interval resamples replicas, not points."""
    x = np.asarray(sample, dtype=float)
    ts = np.asarray(ts, dtype=float)
    surv = empirical_survival(x, ts)
    _check_tail_points(ts, surv)
    lx = np.log(ts)
    slope, intercept = np.polyfit(lx, np.log(surv), 1)
    rng = generator(seed, "tail_slope_sample")
    boot = []
    for _ in range(n_boot):
        s = empirical_survival(x[rng.integers(0, len(x), len(x))], ts)
        if np.all(s > 0):
            boot.append(np.polyfit(lx, np.log(s), 1)[0])
    lo, hi = np.quantile(boot, [(1 - level) / 2, (1 + level) / 2])
    return TailFit(float(slope), float(intercept), float(lo), float(hi))


def mean_and_stderr(x) -> tuple[float, float]:
    a = np.asarray(x, dtype=float)
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a)))


def variance_and_stderr(x) -> tuple[float, float]:
    """Sample variance and its standard error ``sqrt((m4 - s^4) / n)``."""
    a = np.asarray(x, dtype=float)
    c = a - a.mean()
    v = float(np.mean(c**2) * len(a) / (len(a) - 1))
    m4 = float(np.mean(c**4))
    return v, math.sqrt(max(m4 - v**2, 0.0) / len(a))


def proportion(hits) -> tuple[float, float]:
    h = np.asarray(hits, dtype=float)
    p = float(h.mean())
    return p, math.sqrt(p * (1 - p) / len(h))
