"""Standalone figure scripts over artifact directories.

One entry point per figure kind; all exit 2 on bad input or schema
mismatch and print the written paths on success.
"""

import argparse
import sys

from .artifact import SchemaError
from .plots import (plot_dispersion, plot_energy, plot_heatmap,
                    plot_sigma_sweep)


def _mode(text):
    bits = text.split(",")
    if len(bits) != 2:
        raise argparse.ArgumentTypeError(f"mode {text!r} is not k1,k2")
    return int(bits[0]), int(bits[1])


def _finish(paths):
    for p in paths:
        print(p)
    return 0


def main_dispersion(argv=None):
    ap = argparse.ArgumentParser(
        description="overlay measured mode fits on the dispersion curves")
    ap.add_argument("runs", nargs="*", help="run directories")
    ap.add_argument("--mode", action="append", type=_mode, default=None,
                    help="k1,k2 (repeatable; default: all probed modes)")
    ap.add_argument("--out", default="dispersion",
                    help="output base name (writes .png and .svg)")
    args = ap.parse_args(argv)
    try:
        paths, points = plot_dispersion(args.runs, modes=args.mode,
                                        out=args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for p in points:
        print(f"mode ({p.k1},{p.k2}) [{p.run}]: omega {p.measured_omega:.6g} "
              f"vs {p.oracle_omega:.6g}, mu {p.measured_mu:.6g} vs "
              f"{p.oracle_mu:.6g}, rel dev {p.rel_dev:.3g}")
    return _finish(paths)


def main_energy(argv=None):
    ap = argparse.ArgumentParser(description="energy and Lambda histories")
    ap.add_argument("run", help="run directory")
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    try:
        return _finish(plot_energy(args.run, out=args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main_sweep(argv=None):
    ap = argparse.ArgumentParser(description="sigma-sweep distance curves")
    ap.add_argument("sweep", help="sweep directory")
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    try:
        return _finish(plot_sigma_sweep(args.sweep, out=args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main_heatmap(argv=None):
    ap = argparse.ArgumentParser(description="interface heatmap from a frame")
    ap.add_argument("run", help="run directory")
    ap.add_argument("--snapshot", default="final.bin")
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    try:
        return _finish(plot_heatmap(args.run, snapshot=args.snapshot,
                                    out=args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
