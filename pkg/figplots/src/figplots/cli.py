"""CLI: render one figure kind from CSV inputs.

Usage: qwplot <kind> --in a.csv [b.csv ...] --out figure.png
"""

from __future__ import annotations

import argparse
import sys

from .recipes import KINDS, FigureRecipe, SchemaError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwplot", description="Render pairwalk CSV outputs as figures.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV")
    parser.add_argument("--out", dest="output", required=True,
                        help="output image (png or svg)")
    parser.add_argument("--series", choices=["raw", "shifted"], default="raw",
                        help="variance column to plot (variance kind only)")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    recipe = FigureRecipe(kind=args.kind, inputs=tuple(args.inputs),
                          output=args.output, series=args.series,
                          title=args.title)
    try:
        path = render(recipe)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
