"""Command line: fbmplot --kind KIND --in PATHS --out FILE (PNG or SVG)."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, PlotError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fbmplot",
                                     description="render fbmlab output figures")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        help="input CSV/JSON artifacts, order per figure kind")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(args.kind, tuple(args.inputs), args.out))
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
