"""Experiment reports and their CSV / JSON serialisation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

COLUMNS = ("experiment", "family", "delta", "epsilon", "t", "cell", "estimate", "stderr",
           "target", "rule", "pass", "n_replicas", "n_failed", "seed")
HEADER = ",".join(COLUMNS)


@dataclass(frozen=True)
class Row:
    """One report cell. ``rule`` is empty for informational rows, which carry no verdict."""

    experiment: str
    cell: str
    estimate: float
    stderr: float | None = None
    target: float | None = None
    rule: str = ""
    passed: bool | None = None
    family: str = ""
    delta: float | None = None
    epsilon: float | None = None
    t: float | None = None
    n_replicas: int | None = None
    n_failed: int = 0
    seed: int = 0

    def values(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return {k: d[k] for k in COLUMNS}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    rows: list[Row] = field(default_factory=list)
    runtime: float = 0.0

    def add(self, **kw) -> Row:
        kw.setdefault("experiment", self.experiment)
        kw.setdefault("seed", self.seed)
        row = Row(**kw)
        self.rows.append(row)
        return row

    def extend(self, rows):
        self.rows.extend(rows)

    @property
    def ruled(self) -> list[Row]:
        return [r for r in self.rows if r.rule]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.ruled)

    def rows_for(self, rule: str) -> list[Row]:
        return [r for r in self.rows if r.rule == rule]

    def to_csv(self) -> str:
        lines = [HEADER]
        for r in self.rows:
            lines.append(",".join(_fmt(v) for v in r.values().values()))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        objs = [{k: _json_value(v) for k, v in r.values().items()} for r in self.rows]
        return json.dumps(objs, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()
