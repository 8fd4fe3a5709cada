"""Command line interface.

Subcommands: constants, verify, solve, validate, functionals.  Each reads a
JSON configuration (falling back to the canonical unit-ball configuration)
and writes its artifacts into the output directory.
"""

from __future__ import annotations

import argparse
import sys

from .config import canonical_config, load_config
from .harness import (EXIT_INADMISSIBLE, cmd_constants, cmd_solve,
                      cmd_validate, cmd_verify)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a JSON experiment config "
                                         "(default: canonical unit ball)")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--format", choices=("csv", "json"),
                        help="restrict emitted formats")
    parser.add_argument("--window", help="evaluation window as d_min,d_max")
    parser.add_argument("--tol", type=float,
                        help="continuation tolerance override")


def _build_config(args):
    cfg = load_config(args.config) if args.config else canonical_config()
    if args.out:
        cfg.out_dir = args.out
    if args.window:
        lo, hi = (float(x) for x in args.window.split(","))
        cfg.window = (lo, hi)
    if args.tol is not None:
        cfg.tol = args.tol
    if args.format:
        cfg.formats = (args.format,)
    return cfg


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blowup",
        description="Boundary asymptotics of blow-up solutions of the "
                    "p-Laplacian with weighted absorption: constants, "
                    "verification suites, and an independent radial solver.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, description in [
            ("constants", "evaluate the expansion constants"),
            ("verify", "run a verification suite"),
            ("solve", "run the continuation solver and dump the solution"),
            ("validate", "full pipeline with slope fit and report"),
            ("functionals", "boundary-functional limit suite"),
    ]:
        p = sub.add_parser(name, help=description)
        _add_common(p)
        if name == "verify":
            p.add_argument("suite", choices=("lemma2", "lemma3", "functionals"))
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except (ValueError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    if args.command == "constants":
        _, code = cmd_constants(cfg)
    elif args.command == "verify":
        _, code = cmd_verify(cfg, args.suite)
    elif args.command == "functionals":
        _, code = cmd_verify(cfg, "functionals")
    elif args.command == "solve":
        _, code = cmd_solve(cfg)
    else:
        _, code = cmd_validate(cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
