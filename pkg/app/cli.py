#!/usr/bin/env python3
"""
Command line entry point.

    python -m app.cli run poiseuille2d [--config file] [--output dir]
    python -m app.cli eoc advectionDiffusion1d --resolutions 50,100,200
    python -m app.cli optimize rosenbrock

Exit codes: 0 success, 1 invalid input, 2 numerical blow-up, 3 optimizer failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from app.cases import case_names, run_case, run_eoc, run_optimization
from app.cases.common import load_case_config
from app.core.errors import LbError, NumericalBlowupError, OptimizerError, ValidationError
from app.core.ostream import get_logger, set_level

logger = get_logger("main")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BLOWUP = 2
EXIT_OPTIMIZER = 3


def _resolutions(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Resolutions must be integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbkit", description="2D lattice Boltzmann benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("case", help=f"one of {', '.join(case_names())}")
        p.add_argument("--config", help="parameter file overlaying the case defaults")
        p.add_argument("--output", help="output directory (overrides LBKIT_OUTPUT_DIR)")
        p.add_argument("--quiet", action="store_true", help="only log warnings and errors")
        p.add_argument("--report", help="write the JSON report to this file")

    run = sub.add_parser("run", help="run a case at its configured resolution")
    common(run)
    run.add_argument("--restart", help="checkpoint file to resume from")

    eoc = sub.add_parser("eoc", help="run a convergence study")
    common(eoc)
    eoc.add_argument("--resolutions", type=_resolutions, help="comma separated, e.g. 50,100,200")

    opt = sub.add_parser("optimize", help="run an optimization case")
    common(opt)
    return parser


def _execute(args) -> dict:
    config = load_case_config(args.case, args.config, args.output)
    if getattr(args, "restart", None):
        config.restart = Path(args.restart)
    if args.command == "run":
        report = run_case(args.case, config)
    elif args.command == "eoc":
        report = run_eoc(args.case, config, args.resolutions)
    else:
        report = run_optimization(args.case, config)
    return report.to_dict()


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.quiet:
        set_level("WARNING")
    try:
        if args.case not in case_names():
            raise ValidationError(f"Unknown case {args.case}. Available: {case_names()}")
        report = _execute(args)
    except NumericalBlowupError as exc:
        logger.error(str(exc))
        return EXIT_BLOWUP
    except OptimizerError as exc:
        logger.error(str(exc))
        return EXIT_OPTIMIZER
    except LbError as exc:
        logger.error(str(exc))
        return EXIT_INVALID

    text = json.dumps(report, indent=2, default=str)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    for path in report["files"]:
        logger.info(f"wrote {path}")
    for key, slope in report["eoc"].items():
        print(f"EOC {key} {slope:.6f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
