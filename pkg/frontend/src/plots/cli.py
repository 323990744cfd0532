"""Command-line entry point: plots render --kind <k> --in <csv> --out <png>."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plots",
                                description="render figures from simulation CSV output")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render")
    r.add_argument("--kind", choices=KINDS, required=True)
    r.add_argument("--in", dest="input_csv", required=True)
    r.add_argument("--out", dest="output_image", required=True)
    r.add_argument("--no-annotations", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(args.input_csv, args.kind, args.output_image,
                      annotations=not args.no_annotations)
    try:
        render(spec)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
