"""Batch figure renderer for the simulation CSV outputs."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureKind, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epitrial-plot",
        description="Render sweep curves, panel grids, and (beta, gamma) "
                    "heatmaps from the simulation CSV files.")
    parser.add_argument("--kind", required=True,
                        choices=[k.value for k in FigureKind])
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=FigureKind(args.kind),
                      input_paths=tuple(args.inputs),
                      output_path=args.out)
    out = render(spec)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
