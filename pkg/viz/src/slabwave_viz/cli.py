"""slabwave-viz: render figures from slabwave SLB1/CSV outputs.

Usage: slabwave-viz <kind> <inputs...> -o out.png
"""

from __future__ import annotations

import argparse
import sys

from .formats import FormatError
from .render import KINDS, FigureJob, render


def main(argv=None):
    ap = argparse.ArgumentParser(prog="slabwave-viz",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=sorted(KINDS))
    ap.add_argument("inputs", nargs="+")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    try:
        render(FigureJob(kind=args.kind, inputs=tuple(args.inputs),
                         output=args.output))
    except (FormatError, OSError, ValueError) as exc:
        print(f"E:viz:{exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
