"""Readers for the starnls on-disk formats.

Checkpoint layout: one JSON header line (terminated by a newline), then for
each edge, in edge order, m_j complex samples stored as interleaved
(re, im) little-endian float64.  Header fields used here: t, n_edges, m,
alpha, edge_length, dx.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class CheckpointFormatError(ValueError):
    """Malformed checkpoint; the message names the failing byte offset."""


class EmptyRunError(ValueError):
    """Run directory lacks the data required for the requested figure."""


def read_checkpoint(path):
    """Return (header dict, list of per-edge complex arrays)."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise CheckpointFormatError(
            f"{path}: no header line (byte offset 0)")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(
            f"{path}: bad JSON header (byte offset 0): {exc}") from exc
    if header.get("format") != "starnls-checkpoint":
        raise CheckpointFormatError(
            f"{path}: unknown format tag (byte offset 0)")
    offset = nl + 1
    edges = []
    for j, mj in enumerate(header.get("m", [])):
        nbytes = 16 * int(mj)
        block = data[offset:offset + nbytes]
        if len(block) != nbytes:
            raise CheckpointFormatError(
                f"{path}: edge {j} needs {nbytes} bytes at byte offset "
                f"{offset}, found {len(block)}")
        raw = np.frombuffer(block, dtype="<f8")
        edges.append(raw[0::2] + 1j * raw[1::2])
        offset += nbytes
    if offset != len(data):
        raise CheckpointFormatError(
            f"{path}: trailing bytes at byte offset {offset}")
    return header, edges


def edge_grid(header, j):
    """Signed node positions of edge j (incoming edge negative)."""
    dx = header["dx"][j]
    m = header["m"][j]
    nodes = (np.arange(1, m + 1) - 0.5) * dx
    return -nodes if j == 0 else nodes


def read_diagnostics(run_dir):
    path = Path(run_dir) / "diagnostics.csv"
    if not path.exists():
        raise EmptyRunError(f"{run_dir}: no diagnostics.csv")
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EmptyRunError(f"{run_dir}: diagnostics.csv holds no rows")
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}


def list_snapshots(run_dir):
    snapdir = Path(run_dir) / "snapshots"
    snaps = sorted(snapdir.glob("snap_*.chk")) if snapdir.exists() else []
    if not snaps:
        raise EmptyRunError(f"{run_dir}: no snapshots found")
    return snaps
