"""Console entry points: plot-phase, plot-portrait, plot-edges.

Thin argparse wrappers over the figure functions.  Input problems (missing
files, unknown schema versions, malformed tables) exit 1 with a one-line
message; anything else is a bug and raises normally.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")  # batch scripts; never touch a display

from .figures import plot_edges, plot_phase_diagram, plot_phase_portrait
from .io import SchemaError


def _guard(fn, *args, **kwargs):
    try:
        return 0, fn(*args, **kwargs)
    except (SchemaError, FileNotFoundError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1, None


def run_phase(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot-phase",
        description="Heatmap of a stackedcp sweep with the mean-field "
                    "classification boundaries overlaid.")
    ap.add_argument("--sweep", required=True, help="sweep.csv from "
                    "`stackedcp sweep`")
    ap.add_argument("--out", required=True, help="output image (.png/.svg)")
    ap.add_argument("--axes", default=None, metavar="X,Y",
                    help="axis columns as x,y (default: file order)")
    ap.add_argument("--value", default="symbiont_survival",
                    help="column to plot (default: symbiont_survival)")
    ns = ap.parse_args(argv)
    axes = tuple(ns.axes.split(",")) if ns.axes else None
    if axes is not None and len(axes) != 2:
        ap.error("--axes needs exactly two comma-separated names")
    code, info = _guard(plot_phase_diagram, ns.sweep, ns.out, axes=axes,
                        value=ns.value)
    if code == 0:
        h, w = info["shape"]
        print(f"plot-phase: {w}x{h} grid, outcomes {info['outcomes']}; "
              f"wrote {info['out']}")
    return code


def run_portrait(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot-portrait",
        description="Mean-field phase portrait: trajectories, nullclines, "
                    "equilibria in the density triangle.")
    ap.add_argument("--meanfield", required=True,
                    help="meanfield.json from `stackedcp meanfield`")
    ap.add_argument("--out", required=True, help="output image (.png/.svg)")
    ns = ap.parse_args(argv)
    code, info = _guard(plot_phase_portrait, ns.meanfield, ns.out)
    if code == 0:
        print(f"plot-portrait: {info['n_trajectories']} trajectories, "
              f"equilibria {info['equilibria']}; wrote {info['out']}")
    return code


def run_edges(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plot-edges",
        description="Edge positions r_t, l_t over time with fitted speeds.")
    ap.add_argument("--edges", required=True,
                    help="edge series CSV (t,r,l or t,r,l,d)")
    ap.add_argument("--out", required=True, help="output image (.png/.svg)")
    ns = ap.parse_args(argv)
    code, info = _guard(plot_edges, ns.edges, ns.out)
    if code == 0:
        ar = "n/a" if info["alpha_r"] is None else f"{info['alpha_r']:.4g}"
        al = "n/a" if info["alpha_l"] is None else f"{info['alpha_l']:.4g}"
        print(f"plot-edges: {info['n_points']} points, alpha_r={ar}, "
              f"alpha_l={al}; wrote {info['out']}")
    return code
