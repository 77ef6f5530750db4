"""Script entry point: ``plot <figure-id> <csv> <out.png>``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, FigureSpec, SchemaMismatch, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="render a figure from an experiment CSV")
    parser.add_argument("figure", choices=sorted(FIGURES))
    parser.add_argument("csv")
    parser.add_argument("out")
    args = parser.parse_args(argv)
    try:
        path = render(FigureSpec(figure=args.figure, csv_path=args.csv,
                                 out_path=args.out))
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
