"""Command line entry point: run experiments, list the registry, validate configs.

Exit codes: 0 all assertions passed, 1 assertion failure, 2 usage/parse error.
The output root may be overridden with the SCLHOM_OUT_ROOT environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import parse_config
from .errors import ParseError, SclhomError, UnknownExperiment, ValidationError
from .experiments import list_experiments, run_experiment
from .models import validate_problem


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sclhom",
                                 description="stochastic conservation-law homogenization lab")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a registry experiment")
    runp.add_argument("experiment")
    runp.add_argument("--config", default=None, help="config file (text or JSON)")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--paths", type=int, default=None)
    runp.add_argument("--threads", type=int, default=1)

    sub.add_parser("list", help="list experiments")

    valp = sub.add_parser("validate", help="validate a config file")
    valp.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0

    if args.command == "list":
        for name, desc in list_experiments():
            print(f"{name:24s} {desc}")
        return 0

    if args.command == "validate":
        try:
            cfg = parse_config(args.config)
        except (ParseError, ValidationError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        report = validate_problem(cfg.problem)
        print(report.summary())
        return 0 if report.passed else 1

    # run
    try:
        cfg = parse_config(args.config) if args.config else None
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out_root = os.environ.get("SCLHOM_OUT_ROOT", ".")
    out_dir = Path(args.out) if args.out else Path(out_root) / "out" / args.experiment
    try:
        manifest = run_experiment(args.experiment, cfg, out_dir,
                                  seed=args.seed, n_paths=args.paths,
                                  threads=args.threads)
    except UnknownExperiment as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SclhomError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for a in manifest.assertions:
        print(f"{'PASS' if a['passed'] else 'FAIL'} {a['name']}: {a['detail']}")
    print(f"outputs in {out_dir}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
