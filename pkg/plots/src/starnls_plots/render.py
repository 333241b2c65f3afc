"""Figure rendering: space-time heatmaps of |u|^2 and postprocessed panels.

Heatmaps display the weighted field |u_j|^2 = |alpha_j psi_j|^2 per edge
(continuous across the vertex), one panel per edge, time increasing
upward.  The panels figure stacks the position of the maximum of |u|
(solid while it sits on the incoming edge, dashed after it crosses), the
asymmetry between the outgoing edges, and the momentum versus time.

Rendering is deterministic: Agg backend, pinned style, fixed PNG metadata.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import (EmptyRunError, edge_grid, list_snapshots, read_checkpoint,
                 read_diagnostics)

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": False,
    "image.cmap": "viridis",
}
_PNG_METADATA = {"Software": "starnls-plots"}


@dataclass
class FigureSpec:
    run_dir: str
    kind: str                      # "heatmap" | "panels"
    out_path: str
    edges: tuple | None = None     # heatmap edge selection (default: all)
    vmax: float | None = None      # color scale ceiling (default: data max)


def heatmap_matrix(run_dir, edge):
    """(t, x, |u|^2 matrix) for one edge, assembled from the snapshots."""
    times, rows, grid, alpha = [], [], None, None
    for snap in list_snapshots(run_dir):
        header, fields = read_checkpoint(snap)
        if grid is None:
            grid = edge_grid(header, edge)
            alpha = header["alpha"][edge]
        times.append(header["t"])
        rows.append(np.abs(alpha * fields[edge]) ** 2)
    order = np.argsort(times)
    return (np.array(times)[order], grid,
            np.array(rows)[order])


def _render_heatmap(spec: FigureSpec):
    first_header, _ = read_checkpoint(list_snapshots(spec.run_dir)[0])
    n_edges = first_header["n_edges"]
    edges = spec.edges if spec.edges else tuple(range(n_edges))
    data = [heatmap_matrix(spec.run_dir, j) for j in edges]
    vmax = spec.vmax or max(float(mat.max()) for _, _, mat in data)

    fig, axes = plt.subplots(len(edges), 1, figsize=(6.0, 2.2 * len(edges)),
                             sharex=False, constrained_layout=True)
    axes = np.atleast_1d(axes)
    for ax, j, (t, x, mat) in zip(axes, edges, data):
        im = ax.pcolormesh(x, t, mat, vmin=0.0, vmax=vmax, shading="auto",
                           rasterized=True)
        ax.set_ylabel(f"edge {j + 1}\nt")
    axes[-1].set_xlabel("x")
    fig.colorbar(im, ax=list(axes), label=r"$|u|^2$")
    return fig


def crossing_time(diag):
    """First sampled time after which the maximum stays off edge 1."""
    edge = diag["max_edge"].astype(int)
    t = diag["t"]
    for i in range(len(t)):
        if np.all(edge[i:i + 5] != 1):
            return t[i]
    return None


def _render_panels(spec: FigureSpec):
    d = read_diagnostics(spec.run_dir)
    t = d["t"]
    cross = crossing_time(d)
    on_incoming = d["max_edge"].astype(int) == 1

    fig, (ax1, ax2, ax3) = plt.subplots(3, 1, figsize=(6.0, 6.5),
                                        sharex=True, constrained_layout=True)
    pos = d["max_pos"]
    ax1.plot(t[on_incoming], pos[on_incoming], "-", color="C0",
             label="incoming edge")
    if np.any(~on_incoming):
        ax1.plot(t[~on_incoming], pos[~on_incoming], "--", color="C0",
                 label="outgoing edge")
    if cross is not None:
        ax1.axvline(cross, color="0.6", lw=0.8)
    ax1.set_ylabel("position of max |u|")
    ax1.legend(loc="best", fontsize=8)

    ax2.plot(t, d["asymmetry"], color="C1")
    ax2.axhline(0.0, color="0.8", lw=0.6)
    ax2.set_ylabel(r"$\|u_2\| - \|u_3\|$")

    ax3.plot(t, d["momentum"], color="C2")
    ax3.axhline(0.0, color="0.8", lw=0.6)
    ax3.set_ylabel("momentum")
    ax3.set_xlabel("t")
    return fig


def render(spec: FigureSpec) -> Path:
    """Render the figure described by spec; returns the written path.

    Raises EmptyRunError/CheckpointFormatError before creating any file
    when the run directory lacks the needed inputs.
    """
    if spec.kind not in ("heatmap", "panels"):
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    with plt.style.context(_STYLE):
        fig = (_render_heatmap if spec.kind == "heatmap" else _render_panels)(spec)
        out = Path(spec.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format=out.suffix.lstrip(".") or "png",
                    metadata=_PNG_METADATA)
        plt.close(fig)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="starnls-render",
        description="render figures from a starnls run directory")
    ap.add_argument("--run", required=True, help="run directory")
    ap.add_argument("--kind", required=True, choices=("heatmap", "panels"))
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--edges", help="comma-separated edge indices (heatmap)")
    ap.add_argument("--vmax", type=float, help="color scale ceiling")
    args = ap.parse_args(argv)
    edges = tuple(int(v) for v in args.edges.split(",")) if args.edges else None
    try:
        out = render(FigureSpec(run_dir=args.run, kind=args.kind,
                                out_path=args.out, edges=edges,
                                vmax=args.vmax))
    except (EmptyRunError, ValueError) as exc:
        print(f"starnls-render: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
