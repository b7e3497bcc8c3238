"""circafig command line.

    circafig --in <bundle dir> --out <dir> --kind rose
    circafig --in <bundle dir> --out <dir> --kind spectrogram --no-log

Renders one figure kind from a circaforage CSV bundle into <out>/<kind>.png.
Schema mismatches print a diagnostic and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .render import RENDERERS, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circafig")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="protocol CSV bundle directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--no-log", action="store_true",
                        help="plot spectrogram power linearly")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(args.kind, args.in_dir, args.out,
                     log_power=not args.no_log)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
