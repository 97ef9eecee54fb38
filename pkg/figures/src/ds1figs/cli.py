"""ds1-figs: render one figure from solver output files.

Usage:
    ds1-figs surface   SNAPSHOT -o out.png
    ds1-figs contour   SNAPSHOT -o out.png
    ds1-figs spectrum  SNAPSHOT -o out.png
    ds1-figs norms     NORMS_CSV -o out.png
    ds1-figs loglog-fit NORMS_CSV FITS_JSON -o out.png [--norm linf|grad]
    ds1-figs residual  SNAPSHOT -o out.png
"""

from __future__ import annotations

import argparse
import json
import sys

from .formats import FormatError, read_fits, read_norms, read_snapshot
from . import render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ds1-figs", description=__doc__)
    sub = parser.add_subparsers(dest="kind", required=True)

    for kind in ("surface", "contour", "spectrum", "residual"):
        p = sub.add_parser(kind)
        p.add_argument("snapshot")
        p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("norms")
    p.add_argument("csv")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("loglog-fit")
    p.add_argument("csv")
    p.add_argument("fits")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--norm", choices=("linf", "grad"), default="linf")

    args = parser.parse_args(argv)
    try:
        if args.kind in ("surface", "contour", "spectrum", "residual"):
            snap = read_snapshot(args.snapshot)
            fn = getattr(render, f"render_{args.kind}")
            summary = fn(snap, args.output)
        elif args.kind == "norms":
            summary = render.render_norms(read_norms(args.csv), args.output)
        else:
            summary = render.render_loglog_fit(
                read_norms(args.csv), read_fits(args.fits), args.output, norm=args.norm
            )
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
