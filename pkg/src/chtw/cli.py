"""``chtw`` command line: validate, run, diff-oracle.

Exit codes: 0 ok, 1 check failed, 2 usage or I/O problem, 3 numeric fault.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import kernel, oracle
from .model import Diagnostic, validate
from .parser import build, parse
from .traceio import write_archive

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


def _report(diags: List[Diagnostic]) -> None:
    for d in diags:
        print(d.format(), file=sys.stderr)


def _load(path: str, mode: Optional[str] = None):
    """Return ``(net, model bytes, exit code or None)``."""
    p = Path(path)
    try:
        data = p.read_bytes()
        text = data.decode("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"ERROR 0:0 cannot read {path}: {exc}", file=sys.stderr)
        return None, None, EXIT_IO
    doc, diags = parse(text)
    net = None
    if not any(d.is_error for d in diags):
        net, more = build(doc, p.parent)
        net = kernel.with_mode(net, mode)
        diags = diags + more + validate(net)
    _report(diags)
    if net is None or any(d.is_error for d in diags):
        return None, data, EXIT_FAIL
    return net, data, None


def cmd_validate(args) -> int:
    _, _, code = _load(args.model)
    return EXIT_OK if code is None else code


def cmd_run(args) -> int:
    net, data, code = _load(args.model, args.mode)
    if code is not None:
        return code
    try:
        trace = kernel.run(net, args.steps)
    except kernel.NumericalFault as exc:
        print(f"ERROR 0:0 numeric fault at step {exc.step} in {exc.field}", file=sys.stderr)
        return EXIT_NUMERIC
    if trace.clamped:
        print(f"WARNING 0:0 {trace.clamped} rate cells clamped at 0", file=sys.stderr)
    try:
        write_archive(trace, net, args.out, args.format, data)
    except OSError as exc:
        print(f"ERROR 0:0 cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_diff_oracle(args) -> int:
    net, _, code = _load(args.model)
    if code is not None:
        return code
    try:
        oracle.check_limits(net)
    except oracle.OracleLimitError as exc:
        print(f"ERROR 0:0 {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        trace = kernel.run(net, args.steps)
        states = oracle.oracle_run(net, args.steps)
    except ArithmeticError as exc:
        print(f"ERROR 0:0 {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    div = oracle.first_divergence(trace, states)
    if div is None:
        print(f"kernel and oracle agree on {args.steps} steps")
        return EXIT_OK
    step, name, cell, kval, oval = div
    print(
        f"divergence at step {step} field {name} cell {cell}: kernel={kval!r} oracle={oval!r}"
    )
    return EXIT_FAIL


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("steps must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chtw", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate and write a trace archive")
    p.add_argument("model")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--mode", choices=("chtw", "chtwr"), default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diff-oracle", help="compare kernel and brute-force oracle")
    p.add_argument("model")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.set_defaults(func=cmd_diff_oracle)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="WARNING 0:0 %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
