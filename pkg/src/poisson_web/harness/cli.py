"""``pw <experiment>``: run one experiment and print its report.

Exit status is 0 when every pass/fail rule passes, 2 when a rule fails and 1
on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import sys

from poisson_web.errors import ParameterError
from poisson_web.harness.config import EXPERIMENTS, FORMATS, ExperimentConfig, load_config, parse_list
from poisson_web.harness.experiments import run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RULE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pw", description="Poisson tree and coalescing-walk experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="flat key = value file of ExperimentConfig fields")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--delta", help="comma-separated list")
    ap.add_argument("--epsilon", help="comma-separated list")
    ap.add_argument("--t", type=float)
    ap.add_argument("--replicas", type=int)
    ap.add_argument("--out", help="write the report here (render: file prefix)")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--depth", type=float)
    return ap


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config, args.experiment)
    else:
        cfg = ExperimentConfig(args.experiment)
    return cfg.with_overrides(
        seed=args.seed, delta=parse_list(args.delta), epsilon=parse_list(args.epsilon), t=args.t,
        replicas=args.replicas, out=args.out, format=args.format, depth=args.depth,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        if cfg.experiment == "render" and not cfg.out:
            raise ParameterError("render needs --out (a file prefix)")
        report = run(cfg)
    except (ValueError, OSError) as exc:
        print(f"pw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    body = report.render(cfg.format)
    if cfg.out and cfg.experiment != "render":
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
    return EXIT_OK if report.all_pass else EXIT_RULE


if __name__ == "__main__":
    sys.exit(main())
