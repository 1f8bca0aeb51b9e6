"""Command line entry point: ``stratified-sparse <suite> [--config FILE] [--set k=v ...] [--out DIR]``."""

from __future__ import annotations

import argparse
import sys

from .config import SUITES, ConfigError, load_config
from .runner import compare_runs, fmt, run_experiment

# suite-specific shortcuts mapped onto config keys
_SHORTCUTS = {
    "sparse-check": ("theta", "beta", "r1", "r2", "trials", "seed"),
    "grids": ("mu", "seed"),
    "weights": ("model", "a", "p", "q"),
    "quantitative": ("theta", "beta", "mode"),
    "riesz": ("k", "alpha", "t"),
    "dispersive": ("alpha", "t", "seed"),
    "multiplier-check": ("theta", "beta"),
    "decay": ("theta", "beta", "s0"),
    "heat": ("t",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratified-sparse",
                                     description="Spectral multiplier and sparse-domination experiments on finite group models.")
    sub = parser.add_subparsers(dest="suite", required=True)
    for name in SUITES:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", help="output directory for CSV files")
        p.add_argument("--model", dest="model_opt")
        for key in _SHORTCUTS.get(name, ()):
            if key != "model":
                p.add_argument(f"--{key}", dest=f"opt_{key}")
    cmp_ = sub.add_parser("compare", help="diff two *_checks.csv files")
    cmp_.add_argument("a")
    cmp_.add_argument("b")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.suite == "compare":
            for row in compare_runs(args.a, args.b):
                print(",".join([row.name, fmt(row.value_a), fmt(row.value_b), fmt(row.ratio),
                                row.verdict_a, row.verdict_b, row.status]))
            return 0
        overrides = list(args.set)
        if args.model_opt:
            overrides.append(f"model={args.model_opt}")
        for key, value in vars(args).items():
            if key.startswith("opt_") and value is not None:
                overrides.append(f"{key[4:]}={value}")
        cfg = load_config(args.config, overrides)
        report = run_experiment(cfg, args.suite, args.out or cfg.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # execution error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for c in report.checks:
        print(f"{c.name},{fmt(c.value)},{c.relation},{fmt(c.threshold)},{c.verdict}")
    print(f"wall_clock_s,{report.wall_clock:.2f}")
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
