"""Command-line interface.

    plot accuracy --in a.csv:labelA --in b.csv:labelB --out fig.png
    plot sweep --in sweep.csv --out fig.png

Each --in takes PATH or PATH:LABEL; the label defaults to the file stem.
Exits nonzero on malformed input; no partial figure is ever written.
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import plot_accuracy, plot_mse_sweep
from .frames import SchemaError


def split_input(spec: str):
    """PATH or PATH:LABEL; the label, if any, follows the last colon."""
    if ":" in spec:
        path, label = spec.rsplit(":", 1)
        if path and os.sep not in label:
            return path, label or None
    return spec, None


def _parser():
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_acc = sub.add_parser("accuracy", help="accuracy-vs-round overlay")
    p_acc.add_argument(
        "--in", dest="inputs", action="append", required=True,
        metavar="CSV[:LABEL]", help="metrics CSV with optional label",
    )
    p_acc.add_argument("--out", required=True, help="output image path")
    p_acc.add_argument(
        "--window", type=int, default=0,
        help="trailing-mean smoothing window (off by default)",
    )

    p_sweep = sub.add_parser("sweep", help="AirComp MSE vs SNR curves")
    p_sweep.add_argument("--in", dest="input", required=True, metavar="CSV")
    p_sweep.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "accuracy":
            plot_accuracy([split_input(s) for s in args.inputs], args.out, args.window)
        else:
            plot_mse_sweep(args.input, args.out)
    except (SchemaError, OSError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
