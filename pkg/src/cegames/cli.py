"""Command-line front end.

Exit status: 0 on success, 1 when the input document is invalid, 2 on I/O
errors or when a size guard is exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from .ceg import build_ceg, ceg_to_dict, export_dot
from .ci import POSITION_TARGET_NOTE, CiError, all_statements
from .game_model import (
    GameFormatError,
    GameTree,
    GameValidationError,
    dumps,
    parse_game,
    push_edge_utilities_to_leaves,
    serialize_game,
    validate,
)
from .generate import random_game
from .simplify import parsimonize, trace_to_json
from .solve import GuardExceeded, propagate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Usage(Exception):
    pass


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, output: str | None) -> None:
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


def _read_game(path: str | None, *, check: bool = True) -> GameTree:
    if not path:
        raise _Usage("--input is required")
    text = Path(path).read_text(encoding="utf-8")
    return parse_game(text, check=check)


def _simplified(t: GameTree):
    g, trace = parsimonize(build_ceg(push_edge_utilities_to_leaves(t)))
    return g, trace


def cmd_validate(args: argparse.Namespace) -> int:
    t = _read_game(args.input, check=False)
    diags = validate(t)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return EXIT_INVALID
    _emit("ok\n", args.output)
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    g = build_ceg(_read_game(args.input))
    _emit(dumps(ceg_to_dict(g)), args.output)
    if args.dot:
        write_atomic(args.dot, export_dot(g))
    return EXIT_OK


def cmd_simplify(args: argparse.Namespace) -> int:
    g, trace = _simplified(_read_game(args.input))
    doc = {"ceg": ceg_to_dict(g)}
    if args.emit_trace:
        doc["trace"] = trace_to_json(trace)
    _emit(dumps(doc), args.output)
    if args.dot:
        write_atomic(args.dot, export_dot(g))
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    g, _ = _simplified(_read_game(args.input))
    sol = propagate(g)
    _emit(dumps(sol.to_dict()), args.output)
    if args.dot:
        write_atomic(args.dot, export_dot(g, sol))
    return EXIT_OK


def cmd_ci(args: argparse.Namespace) -> int:
    t = _read_game(args.input)
    stmts = all_statements(t, max_vars=args.max_subset)
    doc = {"note": POSITION_TARGET_NOTE, "statements": [s.to_dict() for s in stmts]}
    _emit(dumps(doc), args.output)
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    t = _read_game(args.input)
    _emit(export_dot(build_ceg(t)), args.output or args.dot)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise _Usage("generate requires --seed")
    _emit(serialize_game(random_game(args.seed, with_ties=args.with_ties)), args.output)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "build": cmd_build,
    "simplify": cmd_simplify,
    "solve": cmd_solve,
    "ci": cmd_ci,
    "export": cmd_export,
    "generate": cmd_generate,
}


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cegames", description="Chain event graph analysis of Bayesian games")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--input", help="game document (JSON)")
    parser.add_argument("--output", help="output file (default: standard output)")
    parser.add_argument("--dot", help="also write a Graphviz DOT rendering here")
    parser.add_argument("--seed", type=_seed, help="seed for generate")
    parser.add_argument("--max-subset", type=int, default=12, help="variable limit for the CI subset search")
    parser.add_argument("--emit-trace", action="store_true", help="include the simplification trace")
    parser.add_argument("--with-ties", action="store_true", help="generate: inject a payoff tie")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GameFormatError, GameValidationError, CiError) as exc:
        diags = getattr(exc, "diagnostics", None) or [exc]
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, GuardExceeded, _Usage) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
