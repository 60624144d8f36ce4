"""Command-line entry point: render figures from run output directories.

Exit codes: 0 all figures rendered, 1 specification or input-data error.
"""

from __future__ import annotations

import argparse
import sys

from boxilqr_plots.io import RunDataError
from boxilqr_plots.render import KINDS, FigureSpec, SpecError, load_spec, render


def cmd_render(args) -> int:
    status = 0
    for spec_path in args.spec:
        try:
            spec = load_spec(spec_path)
            out = render(spec)
        except (SpecError, RunDataError) as e:
            print(f"error: {e}", file=sys.stderr)
            status = 1
            continue
        if not args.quiet:
            print(f"{spec_path}: wrote {out}")
    return status


def cmd_quick(args) -> int:
    """Render one kind straight from a run directory, without a spec file."""
    from pathlib import Path
    try:
        spec = FigureSpec(run=Path(args.run), kind=args.kind,
                          output=Path(args.output))
        out = render(spec)
    except (SpecError, RunDataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="box-ilqr-plot",
        description="Render figures from box-ilqr run outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render",
                              help="render figures from JSON spec files")
    p_render.add_argument("spec", nargs="+", help="figure spec file(s)")
    p_render.add_argument("--quiet", action="store_true")
    p_render.set_defaults(func=cmd_render)

    p_quick = sub.add_parser("quick",
                             help="render one figure without a spec file")
    p_quick.add_argument("run", help="run output directory")
    p_quick.add_argument("kind", choices=KINDS)
    p_quick.add_argument("output", help="figure file to write")
    p_quick.add_argument("--quiet", action="store_true")
    p_quick.set_defaults(func=cmd_quick)

    args = parser.parse_args(argv)
    return args.func(args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
