"""Command-line verification harness.

Usage::

    gpdlab verify --config scene.toml --suite groupoid-axioms \
        --suite lalg --out reports/ [--seed N] [--steps N] [--grid N]

Exit codes: 0 all selected suites pass, 1 at least one check failed,
2 configuration or usage error, 3 runtime error during a suite.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scenes import ConfigError, SceneConfig
from .suites import SUITES, run_suite, write_report

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gpdlab",
        description="Numeric verification suites for Lie groupoid "
                    "structures.")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--config", required=True, help="scene config (TOML)")
    v.add_argument("--suite", action="append", required=True,
                   metavar="NAME",
                   help=f"suite to run (repeatable); one of: "
                        f"{', '.join(sorted(SUITES))}")
    v.add_argument("--out", required=True, help="report output directory")
    v.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    v.add_argument("--steps", type=int, default=None,
                   help="override integration steps")
    v.add_argument("--grid", type=int, default=None,
                   help="override base grid size")
    return parser


def verify(args):
    cfg = SceneConfig.from_file(args.config)
    if args.seed is not None or args.steps is not None \
            or args.grid is not None:
        cfg = SceneConfig(kind=cfg.kind, group=cfg.group,
                          cocycle=cfg.cocycle, arcs=cfg.arcs,
                          grid=args.grid if args.grid is not None
                          else cfg.grid,
                          seed=args.seed if args.seed is not None
                          else cfg.seed,
                          steps=args.steps if args.steps is not None
                          else cfg.steps,
                          tolerances=cfg.tolerances)
    for name in args.suite:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r} "
                              f"(available: {', '.join(sorted(SUITES))})")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    objs = cfg.build()
    all_pass = True
    for name in args.suite:
        report = run_suite(name, cfg, objs)
        write_report(report, out / f"{name}.json")
        status = "PASS" if report["pass"] else "FAIL"
        worst = max((c["residual"] for c in report["checks"]), default=0.0)
        print(f"{status} {name}: {len(report['checks'])} checks, "
              f"max residual {worst:.3g} "
              f"({report['timing']['wall_s']:.2f}s)")
        all_pass = all_pass and report["pass"]
    return EXIT_PASS if all_pass else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize others
        return EXIT_CONFIG if exc.code not in (0,) else 0
    try:
        if args.command == "verify":
            return verify(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the exit-code contract
        print(f"runtime error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
