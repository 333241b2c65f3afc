"""Figure rendering for starnls run directories.

Consumes only the documented on-disk outputs (diagnostics/modulation CSVs
and binary field checkpoints); deliberately does not import starnls.
"""

__version__ = "0.1.0"

from .io import CheckpointFormatError, EmptyRunError, read_checkpoint, read_diagnostics
from .render import FigureSpec, heatmap_matrix, render

__all__ = ["CheckpointFormatError", "EmptyRunError", "FigureSpec",
           "heatmap_matrix", "read_checkpoint", "read_diagnostics", "render"]
