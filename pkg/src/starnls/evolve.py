"""Split-step time integration of the NLS flow on the star graph.

One step of size dt is the Strang composition

    linear half-step (dt/2)  o  phase rotation (dt)  o  linear half-step,

second order in dt.  The linear part is Crank-Nicolson,

    (I - i dt/4 Lap_h) f+ = (I + i dt/4 Lap_h) f,

with Lap_h the centered second difference closed at the vertex by the ghost
construction (graph.vertex_closure_matrix) and by the Dirichlet reflection
f_{M+1} = -f_M at each leaf.  With the absorbing layers off, Lap_h is
symmetric and the half-step is unitary in the discrete L^2 norm.  The
nonlinear sub-flow i psi_t = -2 alpha_j^2 |psi|^2 psi is solved exactly by
the pointwise rotation psi -> psi exp(2 i alpha_j^2 |psi|^2 dt).

Absorbing layers: complex coordinate stretching s(x) = 1 + i sigma(x)/w_ref
applied to the second-derivative stencil in a layer of width d at each leaf,
with the polynomial ramp sigma(x) = sigma_0 ((x - x_s)/d)^p and w_ref = 1.
This only modifies the discretized Laplacian at a finite number of nodes
near the leaves.

The vertex coupling makes the Crank-Nicolson matrix "block tridiagonal plus
an N x N coupling": it is solved in O(total nodes) per step by per-edge
tridiagonal solves and an N x N Schur complement (Woodbury form) at the
vertex.
"""

from __future__ import annotations

import json

import numpy as np

from . import _kernels
from .functionals import Diagnostics, diagnostics
from .graph import (GraphFunction, PmlConfig, StarGraph, ghost_values,
                    make_graph, vertex_closure_matrix)

__all__ = [
    "Stepper", "run", "ghost_values", "BlowUpError", "CheckpointError",
    "save_checkpoint", "load_checkpoint",
]

PML_OMEGA_REF = 1.0


class BlowUpError(RuntimeError):
    """Field exceeded the blow-up guard; carries the last good time."""

    def __init__(self, t: float, message: str | None = None):
        super().__init__(message or f"blow-up detected, last good time t={t:.6g}")
        self.t = t


class CheckpointError(ValueError):
    """Malformed checkpoint file."""


def _pml_stretch(g: StarGraph, edge: int):
    """s(xi) at nodes and at the upper half-points of one edge.

    xi is the distance from the vertex along the edge; the layer occupies
    xi in (L - d, L].  Returns (s_node, s_half_lower, s_half_upper).
    """
    p = g.pml
    dx = g.dx[edge]
    mj = len(g.x[edge])
    xi_node = (np.arange(1, mj + 1) - 0.5) * dx
    xi_lower = np.arange(mj) * dx          # half-point below node i
    xi_upper = np.arange(1, mj + 1) * dx   # half-point above node i

    def sigma(xi):
        start = g.edge_length - p.width
        ramp = np.clip((xi - start) / p.width, 0.0, None)
        return p.strength * ramp ** p.exponent

    def s(xi):
        return 1.0 + 1j * sigma(xi) / PML_OMEGA_REF

    return s(xi_node), s(xi_lower), s(xi_upper)


def _laplacian_coefficients(g: StarGraph, with_pml: bool):
    """Packed (lo, di, up, ghost_coef) of the discrete Laplacian.

    lo[first]=up[last]=0; the ghost contribution at each first node (with
    coefficient ghost_coef[j] = 1/(dx_j^2)) is kept separate, the Dirichlet
    reflection at each leaf is folded into the diagonal.
    """
    n = g.n_total
    lo = np.zeros(n, dtype=complex)
    di = np.zeros(n, dtype=complex)
    up = np.zeros(n, dtype=complex)
    gcoef = np.zeros(g.n_edges, dtype=complex)
    pos = 0
    for j in range(g.n_edges):
        mj = len(g.x[j])
        dx2 = g.dx[j] ** 2
        if with_pml and g.pml.strength > 0:
            s_node, s_lo, s_up = _pml_stretch(g, j)
        else:
            s_node = s_lo = s_up = np.ones(mj)
        lo_j = 1.0 / (s_node * s_lo * dx2)
        up_j = 1.0 / (s_node * s_up * dx2)
        di_j = -(lo_j + up_j)
        if with_pml and g.pml.absorption > 0:
            # complex absorbing potential -i eta(x): enters the generator
            # i(Lap + i eta), i.e. +i eta on the Laplacian diagonal
            xi = (np.arange(1, mj + 1) - 0.5) * g.dx[j]
            ramp = np.clip((xi - (g.edge_length - g.pml.width)) / g.pml.width,
                           0.0, None)
            di_j = di_j + 1j * g.pml.absorption * ramp ** g.pml.exponent
        # vertex end: neighbour below node 0 is the ghost
        gcoef[j] = lo_j[0]
        lo_j[0] = 0.0
        # leaf end: f_{M} (wall ghost) = -f_{M-1}
        di_j[-1] -= up_j[-1]
        up_j[-1] = 0.0
        lo[pos:pos + mj] = lo_j
        di[pos:pos + mj] = di_j
        up[pos:pos + mj] = up_j
        pos += mj
    return lo, di, up, gcoef


class Stepper:
    """Strang split-step integrator bound to one graph and one dt.

    Holds the cached Crank-Nicolson factorizations and the vertex Schur
    data; single-threaded (mutable caches), so use one Stepper per thread.
    """

    def __init__(self, graph: StarGraph, dt: float):
        self.graph = graph
        m = graph.m
        self.offsets = np.concatenate(([0], np.cumsum(m))).astype(np.int64)
        self.first_idx = self.offsets[:-1].copy()
        self.alpha_sq = (graph.alpha ** 2).astype(float)
        self.edge_of_node = np.repeat(np.arange(graph.n_edges), m)
        self.closure = vertex_closure_matrix(graph)
        self._lap = _laplacian_coefficients(graph, with_pml=True)
        self.backend = _kernels.active_backend()
        self.dt = None
        self.set_dt(dt)

    def set_dt(self, dt: float) -> None:
        """(Re)build the Crank-Nicolson factorization for a new dt."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        if dt == self.dt:
            return
        self.dt = float(dt)
        lo, di, up, gcoef = self._lap
        c = 1j * self.dt / 4.0
        # LHS A = I - c Lap, RHS B = I + c Lap (ghost parts separate)
        self._fact = _kernels.TridiagFactor(
            self.offsets, -c * lo, 1.0 - c * di, -c * up)
        self._rhs_lo = c * lo
        self._rhs_di = 1.0 + c * di
        self._rhs_up = c * up
        self._rhs_gcoef = c * gcoef
        # Woodbury data for the vertex coupling: A = T + E Mc E^T
        n_e = self.graph.n_edges
        mc = -(c * gcoef)[:, None] * self.closure
        z = np.zeros((self.graph.n_total, n_e), dtype=complex)
        unit = np.zeros(self.graph.n_total, dtype=complex)
        gdiag = np.zeros(n_e, dtype=complex)
        for j in range(n_e):
            unit[:] = 0.0
            unit[self.first_idx[j]] = 1.0
            z[:, j] = self._fact.solve(unit)
            gdiag[j] = z[self.first_idx[j], j]
        k = np.eye(n_e, dtype=complex) + mc * gdiag[None, :]
        self._mcoef = mc
        self._kinv = np.linalg.inv(k)
        # packed per-node correction columns: z[:, j] lives on edge j only
        self._zflat = np.zeros(self.graph.n_total, dtype=complex)
        for j in range(n_e):
            s, t = self.offsets[j], self.offsets[j + 1]
            self._zflat[s:t] = z[s:t, j]

    # -- packed-array core ---------------------------------------------------

    def _linear_half(self, f: np.ndarray) -> np.ndarray:
        first = f[self.first_idx]
        g = self.closure @ first
        rhs = _kernels.tri_apply(self.offsets, self._rhs_lo, self._rhs_di,
                                 self._rhs_up, f)
        rhs[self.first_idx] += self._rhs_gcoef * g
        y = self._fact.solve(rhs)
        w = self._kinv @ (self._mcoef @ y[self.first_idx])
        return y - self._zflat * w[self.edge_of_node]

    def _nonlinear(self, f: np.ndarray) -> None:
        _kernels.phase_rotate(self.offsets, self.alpha_sq, 2.0 * self.dt, f)

    def _strang(self, f: np.ndarray) -> np.ndarray:
        f = self._linear_half(f)
        self._nonlinear(f)
        return self._linear_half(f)

    # -- GraphFunction interface ----------------------------------------------

    def ghost_values(self, f: GraphFunction) -> np.ndarray:
        return ghost_values(f)

    def linear_half_step(self, f: GraphFunction) -> GraphFunction:
        return GraphFunction.unpack(
            self.graph, self._linear_half(f.pack().astype(complex)))

    def nonlinear_step(self, f: GraphFunction) -> GraphFunction:
        flat = f.pack().astype(complex)
        self._nonlinear(flat)
        return GraphFunction.unpack(self.graph, flat)

    def strang_step(self, f: GraphFunction) -> GraphFunction:
        return GraphFunction.unpack(
            self.graph, self._strang(f.pack().astype(complex)))

    def run(self, f0: GraphFunction, t_end: float, observer=None,
            output_every: int = 50, blowup_factor: float = 1e3):
        """Integrate to t_end = n dt; sample diagnostics every output_every
        steps (including step 0 and the final step).

        observer, when given, is called as observer(t, GraphFunction) at
        every sampled step.  Raises BlowUpError when max|Psi| exceeds
        blowup_factor times its initial value or turns non-finite.
        """
        n_steps = int(round(t_end / self.dt))
        if abs(n_steps * self.dt - t_end) > 1e-9 * max(1.0, t_end):
            raise ValueError("t_end must be an integer multiple of dt")
        flat = f0.pack().astype(complex)
        guard = blowup_factor * max(np.max(np.abs(flat)), 1e-300)
        diags: list[Diagnostics] = []

        def sample(step):
            t = step * self.dt
            amax = np.max(np.abs(flat))
            if not np.isfinite(amax) or amax > guard:
                t_good = diags[-1].t if diags else 0.0
                raise BlowUpError(t_good)
            fn = GraphFunction.unpack(self.graph, flat)
            diags.append(diagnostics(fn, t))
            if observer is not None:
                observer(t, fn)

        # sampled exactly at multiples of output_every, so a diagnostics
        # series holds 1 + floor(n_steps/output_every) rows
        sample(0)
        for step in range(1, n_steps + 1):
            flat = self._strang(flat)
            if step % output_every == 0:
                sample(step)
        return GraphFunction.unpack(self.graph, flat), diags


def run(graph: StarGraph, f0: GraphFunction, t_end: float, dt: float,
        observer=None, output_every: int = 50):
    """One-shot convenience wrapper around Stepper.run."""
    return Stepper(graph, dt).run(f0, t_end, observer=observer,
                                  output_every=output_every)


# ---------------------------------------------------------------------------
# checkpoint format: one JSON header line, then per-edge binary blocks of
# interleaved (re, im) little-endian float64, in edge order.
# ---------------------------------------------------------------------------

def save_checkpoint(path, f: GraphFunction, t: float, params: dict | None = None) -> None:
    g = f.graph
    header = {
        "format": "starnls-checkpoint",
        "version": 1,
        "t": float(t),
        "n_edges": g.n_edges,
        "m": [int(v) for v in g.m],
        "alpha": [float(v) for v in g.alpha],
        "edge_length": g.edge_length,
        "dx": [float(v) for v in g.dx],
        "pml": {"width": g.pml.width, "strength": g.pml.strength,
                "exponent": g.pml.exponent, "absorption": g.pml.absorption},
        "params": params or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for e in f.edges:
            arr = np.asarray(e, dtype=complex)
            inter = np.empty(2 * len(arr), dtype="<f8")
            inter[0::2] = arr.real
            inter[1::2] = arr.imag
            fh.write(inter.tobytes())


def load_checkpoint(path, graph: StarGraph | None = None):
    """Read a checkpoint; returns (GraphFunction, t, header).

    Malformed files raise CheckpointError naming the failing byte offset.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise CheckpointError("no header line found (byte offset 0)")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"invalid JSON header (byte offset 0): {exc}") from exc
    if header.get("format") != "starnls-checkpoint":
        raise CheckpointError("not a starnls checkpoint (byte offset 0)")
    if graph is None:
        graph = make_graph(
            header["n_edges"], header["alpha"], header["edge_length"],
            header["dx"], PmlConfig(**header["pml"]))
    offset = nl + 1
    edges = []
    for j, mj in enumerate(header["m"]):
        nbytes = 16 * int(mj)
        block = data[offset:offset + nbytes]
        if len(block) != nbytes:
            raise CheckpointError(
                f"edge {j}: expected {nbytes} bytes at byte offset {offset}, "
                f"got {len(block)}")
        inter = np.frombuffer(block, dtype="<f8")
        edges.append((inter[0::2] + 1j * inter[1::2]).copy())
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"trailing data at byte offset {offset}")
    return GraphFunction(graph, edges), float(header["t"]), header
