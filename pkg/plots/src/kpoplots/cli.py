"""Render command-line front end: kpoplots render --figure ID --in DIR --out FILE."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import InputError
from .recipes import RECIPES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpoplots",
                                     description="Render figures from kposim CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render one figure")
    render.add_argument("--figure", choices=sorted(RECIPES), required=True)
    render.add_argument("--in", dest="indir", type=Path, required=True,
                        help="directory holding the CSV products")
    render.add_argument("--out", type=Path, required=True, help="output image file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        RECIPES[args.figure](args.indir, args.out)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
