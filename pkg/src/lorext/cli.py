"""
Command-line front end: ``lorext {norm,rearrange,certify,factor,verify}``.

Single-result subcommands print one JSON document; ``verify`` writes a
JSON-lines suite report and exits 0 exactly when the suite passes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import LorextError
from .extremal import DEFAULT_BUDGET, DEFAULT_DIRECTIONS, feasibility_probe
from .hardy import TWO_PI, BoundarySamples, factorize
from .lorentz import lorentz_norm, parse_generator
from .rearrange import SampledFunction, decreasing_rearrangement
from .suites import SUITES, SuiteConfig, run_suite

__all__ = ["main", "build_parser", "read_function"]

log = logging.getLogger("lorext")


class CliError(Exception):
    """Bad input on the command line; reported on stderr with exit status 2."""


def read_function(source: str) -> SampledFunction:
    """Load a SampledFunction from a path, ``-`` (stdin) or an inline list.

    Files may be JSON (``{"a", "re", "im"}``) or the CSV form. An inline list
    such as ``1,3,2`` is read as real cell values on [0, 1].
    """
    if source == "-":
        text = sys.stdin.read()
    elif os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    else:
        try:
            vals = [complex(tok.replace(" ", "")) for tok in source.split(",") if tok.strip()]
        except ValueError:
            raise CliError(f"{source!r} is neither a readable file nor a list of numbers") from None
        if not vals:
            raise CliError("empty inline value list")
        return SampledFunction(1.0, vals)
    try:
        if text.lstrip().startswith("{"):
            return SampledFunction.from_json(text)
        return SampledFunction.from_csv(text)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot parse {source!r}: {exc}") from None


def _parse_zeros(text: Optional[str]) -> list[complex]:
    if not text:
        return []
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"cannot parse zero list {text!r}") from None


def _generator(args, interval_length: float):
    spec = args.generator[0] if args.generator else "power:p=2"
    try:
        return parse_generator(spec, interval_length)
    except ValueError as exc:
        raise CliError(f"bad --generator {spec!r}: {exc}") from None


def _emit(doc: dict, out: Optional[str]) -> None:
    text = json.dumps(doc)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_norm(args) -> int:
    f = read_function(args.input)
    phi = _generator(args, f.interval_length)
    _emit({"norm": lorentz_norm(f, phi)}, args.out)
    return 0


def cmd_rearrange(args) -> int:
    f = read_function(args.input)
    _emit({"profile": decreasing_rearrangement(f).values.tolist()}, args.out)
    return 0


def cmd_certify(args) -> int:
    f = read_function(args.input)
    phi = _generator(args, f.interval_length)
    tol = 1e-6 if args.tol is None else args.tol
    v = feasibility_probe(f, phi, directions=args.directions, budget=args.budget,
                          tol=tol, seed=args.seed)
    _emit(v.to_dict(), args.out)
    return 0


def cmd_factor(args) -> int:
    f = read_function(args.input)
    if not math.isclose(f.interval_length, TWO_PI, rel_tol=1e-12):
        raise CliError("boundary samples must be given on [0, 2 pi] (a = 6.283185307179586)")
    b = BoundarySamples(f, args.radius)
    inner, outer, err = factorize(b, _parse_zeros(args.zeros))
    _emit({"inner": inner.to_dict(), "outer": outer.to_dict(), "recombination_error": err},
          args.out)
    return 0


def cmd_verify(args) -> int:
    grids = None if args.grid is None else [int(x) for x in args.grid.split(",")]
    try:
        cfg = SuiteConfig(args.suite, grids=grids, generators=args.generator,
                          trials=args.trials, seed=args.seed, tol=args.tol, out=args.out)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    report = run_suite(cfg)
    if not args.out:
        sys.stdout.write(report.to_jsonl())
    summary = report.aggregate()
    print(f"{cfg.suite}: {summary['aggregate']} ({summary['cases']} cases, "
          f"{len(summary['failed_cases'])} failed)", file=sys.stderr)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--out", default=None, help="write the result here instead of stdout")
    common.add_argument("--grid", default=None, help="comma-separated grid sizes (verify)")
    common.add_argument("--generator", action="append", default=None,
                        help="concave generator, e.g. power:p=2, two_slope, linear or JSON; "
                             "repeatable for verify")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="lorext", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="Lorentz norm of a sampled function")
    p.add_argument("input", help="CSV/JSON file, '-' for stdin, or inline values like 1,3,2")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("rearrange", parents=[common], help="decreasing rearrangement")
    p.add_argument("input")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("certify", parents=[common], help="extreme-point probe")
    p.add_argument("input")
    p.add_argument("--directions", type=int, default=DEFAULT_DIRECTIONS)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("factor", parents=[common], help="inner-outer factorization of boundary samples")
    p.add_argument("input", help="boundary samples on [0, 2 pi] (CSV or JSON)")
    p.add_argument("--zeros", default="", help="comma-separated zeros, e.g. 0.5,0.1+0.2j")
    p.add_argument("--radius", type=float, default=1.0,
                   help="radius the samples were taken at (1 = boundary values)")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=list(SUITES))
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (CliError, LorextError, OSError, ValueError) as exc:
        print(f"lorext {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
