"""Experiment configuration: a flat ``key = value`` file plus command-line overrides."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from poisson_web.errors import ParameterError

EXPERIMENTS = (
    "donsker", "i1-joint", "b1", "b2", "delta-oracle", "xi-tail", "coalescence-tail",
    "px-check", "fkg", "snap-distance", "render",
)
# experiments whose rules are statistical and need a meaningful replica count
INFERENCE = frozenset(EXPERIMENTS) - {"render", "snap-distance"}
MIN_REPLICAS = 1000
FAMILIES = ("X", "Y", "both")
FORMATS = ("csv", "json")

_LISTS = ("delta", "epsilon", "times", "xs")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run. ``None`` fields take the experiment's default.

    ``delta`` and ``epsilon`` are lists. ``lam`` and ``r`` parametrise the
    auxiliary gap, hitting and FKG experiments directly (tree units).
    ``depth`` is the eta-bar depth in web time (default ``10 t``).
    """

    experiment: str
    family: str | None = None
    delta: tuple[float, ...] | None = None
    epsilon: tuple[float, ...] | None = None
    t: float | None = None
    horizon: float | None = None
    replicas: int | None = None
    seed: int = 0
    depth: float | None = None
    out: str | None = None
    format: str = "csv"
    lam: float | None = None
    r: float | None = None
    gamma: float | None = None
    times: tuple[float, ...] | None = None
    xs: tuple[float, ...] | None = None
    h: float | None = None
    t_max: float | None = None
    sandwich_delta: float | None = None
    sandwich_epsilon: float | None = None
    sandwich_replicas: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ParameterError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.family is not None and self.family not in FAMILIES:
            raise ParameterError(f"family must be one of {FAMILIES}")
        if self.format not in FORMATS:
            raise ParameterError(f"format must be one of {FORMATS}")
        for name in ("delta", "sandwich_delta"):
            vals = getattr(self, name)
            vals = vals if isinstance(vals, tuple) else (vals,) if vals is not None else ()
            if any(not 0 < d <= 1 for d in vals):
                raise ParameterError(f"{name} values must lie in (0, 1]")
        for name in ("epsilon", "times", "xs"):
            vals = getattr(self, name) or ()
            if any(not (v > 0 and math.isfinite(v)) for v in vals):
                raise ParameterError(f"{name} values must be positive")
        for name in ("t", "horizon", "depth", "lam", "r", "gamma", "h", "t_max",
                     "sandwich_epsilon"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be positive, got {v}")
        for name in ("replicas", "sandwich_replicas"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ParameterError(f"{name} must be at least 1, got {v}")
        if self.replicas is not None and self.experiment in INFERENCE and self.replicas < MIN_REPLICAS:
            raise ParameterError(f"{self.experiment} needs at least {MIN_REPLICAS} replicas")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def get(self, name, default):
        v = getattr(self, name)
        return default if v is None else v


def _convert(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    raw = raw.strip()
    if name in _LISTS:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if "int" in str(ftype):
        return int(float(raw)) if name != "seed" else int(raw)
    if "float" in str(ftype):
        return float(raw)
    return raw


def parse_list(raw: str | None):
    if raw is None:
        return None
    return tuple(float(v) for v in raw.split(",") if v.strip())


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment, lists are comma-separated)."""
    known = {f.name for f in fields(ExperimentConfig)} - {"extra"}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ParameterError(f"line {lineno}: bad value for {key}: {raw!r}") from exc
    if experiment is not None:
        if values.get("experiment", experiment) != experiment:
            raise ParameterError(
                f"config names experiment {values['experiment']!r}, command asked for {experiment!r}")
        values["experiment"] = experiment
    if "experiment" not in values:
        raise ParameterError("no experiment given")
    return ExperimentConfig(**values)


def load_config(path: str, experiment: str | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), experiment)
