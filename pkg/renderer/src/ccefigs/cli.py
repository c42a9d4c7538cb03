"""Renderer command line: ccefigs render --kind K --in CSV... --out IMG."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccefigs", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    sub = subs.add_parser("render", help="render one figure from CSV inputs")
    sub.add_argument("--kind", required=True, choices=KINDS)
    sub.add_argument("--in", dest="inputs", required=True, nargs="+", metavar="CSV")
    sub.add_argument("--out", required=True, metavar="IMG")
    sub.add_argument("--title", default="")
    sub.add_argument("--xlabel", default="")
    sub.add_argument("--ylabel", default="")
    sub.add_argument("--dpi", type=int, default=150)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind, inputs=tuple(args.inputs), output=args.out,
            title=args.title, xlabel=args.xlabel, ylabel=args.ylabel, dpi=args.dpi,
        )
        path = render(spec)
    except RenderError as err:
        print(f"render error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    print(path, file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(cli_main())
