"""Balanced star graphs and fields sampled on their staggered grids.

A star graph has one incoming edge (edge 0, parameterized by x in [-L, 0))
and n_edges-1 outgoing edges (x in (0, L]).  Edge weights alpha enter the
vertex conditions

    alpha_1 psi_1(0) = ... = alpha_N psi_N(0)
    alpha_1^{-1} psi_1'(0^-) = sum_{j>=2} alpha_j^{-1} psi_j'(0^+)

and the graph is called balanced when 1/alpha_1^2 = sum_{j>=2} 1/alpha_j^2.
Grids are staggered: nodes sit at +-(k - 1/2) dx, so there is no node at the
vertex; vertex quantities are obtained by extrapolation or through the ghost
construction of the evolution scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BALANCE_TOL = 1e-12


class InvalidParameterError(ValueError):
    """Raised for non-positive or inconsistent graph parameters."""


@dataclass(frozen=True)
class PmlConfig:
    """Absorbing-layer profile near each leaf endpoint.

    width: layer depth d (same units as x); strength: coordinate-stretching
    amplitude sigma_0 >= 0; exponent: polynomial ramp order p >= 2;
    absorption: amplitude eta_0 >= 0 of a complex absorbing potential
    -i eta(x) sharing the same ramp.  Stretching damps propagating
    radiation; the absorbing potential is needed to swallow large nonlinear
    pulses without re-emission (see evolve).  strength = absorption = 0
    disables the layer.
    """

    width: float = 5.0
    strength: float = 5.0
    exponent: int = 3
    absorption: float = 0.0

    def validate(self, edge_length: float) -> None:
        if self.width <= 0 or self.width >= edge_length:
            raise InvalidParameterError(
                f"pml width must lie in (0, L); got {self.width} with L={edge_length}"
            )
        if self.strength < 0 or self.absorption < 0:
            raise InvalidParameterError("pml strength/absorption must be >= 0")
        if int(self.exponent) != self.exponent or self.exponent < 2:
            raise InvalidParameterError("pml exponent must be an integer >= 2")

    @property
    def active(self) -> bool:
        return self.strength > 0 or self.absorption > 0


@dataclass(frozen=True)
class StarGraph:
    """Immutable star-graph discretization.

    alpha[0] belongs to the incoming edge.  x[j] holds the signed node
    positions of edge j (negative on edge 0), nearest-to-vertex first.
    """

    n_edges: int
    alpha: np.ndarray
    edge_length: float
    dx: np.ndarray            # per-edge spacing
    pml: PmlConfig
    x: tuple = field(repr=False, default=())
    balance_residual: float = 0.0

    @property
    def m(self) -> np.ndarray:
        """Number of nodes per edge."""
        return np.array([len(xj) for xj in self.x])

    @property
    def n_total(self) -> int:
        return int(sum(len(xj) for xj in self.x))

    @property
    def balanced(self) -> bool:
        return self.balance_residual <= BALANCE_TOL

    def signs(self) -> np.ndarray:
        """Edge orientation: -1 on the incoming edge, +1 outgoing."""
        s = np.ones(self.n_edges)
        s[0] = -1.0
        return s


def make_graph(n_edges, alpha, edge_length, dx, pml=None) -> StarGraph:
    """Build a StarGraph with staggered per-edge grids.

    dx may be a scalar (uniform) or one value per edge; each dx must divide
    edge_length into an integer number of cells.
    """
    n_edges = int(n_edges)
    if n_edges < 3:
        raise InvalidParameterError(f"need n_edges >= 3, got {n_edges}")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n_edges,):
        raise InvalidParameterError(
            f"alpha must have length {n_edges}, got shape {alpha.shape}"
        )
    if np.any(alpha <= 0):
        raise InvalidParameterError("all alpha_j must be positive")
    if edge_length <= 0:
        raise InvalidParameterError("edge_length must be positive")
    dx_arr = np.broadcast_to(np.asarray(dx, dtype=float), (n_edges,)).copy()
    if np.any(dx_arr <= 0):
        raise InvalidParameterError("dx must be positive")
    m = edge_length / dx_arr
    if np.any(np.abs(m - np.round(m)) > 1e-9 * np.maximum(m, 1.0)):
        raise InvalidParameterError(
            f"dx must divide edge_length into an integer number of cells "
            f"(L={edge_length}, dx={dx_arr})"
        )
    m = np.round(m).astype(int)
    if np.any(m < 2):
        raise InvalidParameterError("each edge needs at least 2 grid nodes")
    if pml is None:
        pml = PmlConfig()
    pml.validate(edge_length)

    xs = []
    for j in range(n_edges):
        nodes = (np.arange(1, m[j] + 1) - 0.5) * dx_arr[j]
        xs.append(-nodes if j == 0 else nodes)

    lhs = 1.0 / alpha[0] ** 2
    rhs = float(np.sum(1.0 / alpha[1:] ** 2))
    residual = abs(lhs - rhs) / lhs
    return StarGraph(
        n_edges=n_edges,
        alpha=alpha,
        edge_length=float(edge_length),
        dx=dx_arr,
        pml=pml,
        x=tuple(xs),
        balance_residual=residual,
    )


class GraphFunction:
    """Per-edge arrays of samples aligned with a StarGraph's grids.

    Thin container supporting elementwise arithmetic; inner products and
    norms live in the functionals module.  Instances are treated as values:
    arithmetic returns new objects.
    """

    __slots__ = ("graph", "edges")

    def __init__(self, graph: StarGraph, edges):
        if len(edges) != graph.n_edges:
            raise ValueError("one array per edge required")
        self.graph = graph
        self.edges = [np.asarray(e) for e in edges]
        for j, e in enumerate(self.edges):
            if e.shape != graph.x[j].shape:
                raise ValueError(
                    f"edge {j}: expected {graph.x[j].shape} samples, got {e.shape}"
                )

    @classmethod
    def zeros(cls, graph: StarGraph, dtype=complex) -> "GraphFunction":
        return cls(graph, [np.zeros_like(xj, dtype=dtype) for xj in graph.x])

    @classmethod
    def from_callable(cls, graph: StarGraph, fn, dtype=None) -> "GraphFunction":
        """Sample fn(edge_index, x_array) on every edge."""
        edges = [np.asarray(fn(j, graph.x[j])) for j in range(graph.n_edges)]
        if dtype is not None:
            edges = [e.astype(dtype) for e in edges]
        return cls(graph, edges)

    def copy(self) -> "GraphFunction":
        return GraphFunction(self.graph, [e.copy() for e in self.edges])

    def conj(self) -> "GraphFunction":
        return GraphFunction(self.graph, [np.conj(e) for e in self.edges])

    def astype(self, dtype) -> "GraphFunction":
        return GraphFunction(self.graph, [e.astype(dtype) for e in self.edges])

    @property
    def real(self) -> "GraphFunction":
        return GraphFunction(self.graph, [e.real.copy() for e in self.edges])

    @property
    def imag(self) -> "GraphFunction":
        return GraphFunction(self.graph, [e.imag.copy() for e in self.edges])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(e))) if len(e) else 0.0 for e in self.edges)

    def pack(self) -> np.ndarray:
        """Concatenate edges (edge order, near-vertex first) into one array."""
        return np.concatenate(self.edges)

    @classmethod
    def unpack(cls, graph: StarGraph, flat: np.ndarray) -> "GraphFunction":
        edges, k = [], 0
        for xj in graph.x:
            edges.append(flat[k:k + len(xj)].copy())
            k += len(xj)
        return cls(graph, edges)

    def _binary(self, other, op):
        if isinstance(other, GraphFunction):
            return GraphFunction(
                self.graph, [op(a, b) for a, b in zip(self.edges, other.edges)]
            )
        return GraphFunction(self.graph, [op(a, other) for a in self.edges])

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GraphFunction(self.graph, [-a for a in self.edges])

    def __truediv__(self, scalar):
        return GraphFunction(self.graph, [a / scalar for a in self.edges])


def vertex_closure_matrix(g: StarGraph) -> np.ndarray:
    """N x N map from near-vertex node values to ghost values.

    One ghost node per edge sits at -+ dx/2 across the vertex.  Enforcing the
    N-1 continuity equations alpha_j (g_j + f_j)/2 = alpha_1 (g_1 + f_1)/2
    (vertex value by midpoint interpolation) and the Kirchhoff balance
    alpha_1^{-1}(g_1 - f_1)/dx_1 = sum_j alpha_j^{-1}(f_j - g_j)/dx_j
    (derivatives oriented x->0^- on the incoming edge, x->0^+ outgoing)
    gives g = C f with

        C[j, m] = (2 / alpha_j) (1 / (alpha_m dx_m)) / S - delta_jm,
        S = sum_i 1 / (alpha_i^2 dx_i).

    The system is solvable for any positive alpha.
    """
    a, dx = g.alpha, g.dx
    s = float(np.sum(1.0 / (a**2 * dx)))
    c = 2.0 / (np.outer(a, a * dx) * s)
    return c - np.eye(g.n_edges)


def ghost_values(f: GraphFunction) -> np.ndarray:
    """Ghost-node values across the vertex, one complex value per edge."""
    first = np.array([f.edges[j][0] for j in range(f.graph.n_edges)])
    return vertex_closure_matrix(f.graph) @ first


def vertex_value(f: GraphFunction, edge: int):
    """Linear extrapolation of f on the given edge to the vertex x = 0.

    Uses the two nodes nearest the vertex: (3 f_1 - f_2) / 2.  Exact for
    affine functions of x, second-order for smooth ones.
    """
    e = f.edges[edge]
    if len(e) < 2:
        raise InvalidParameterError("need at least 2 nodes for vertex extrapolation")
    return (3.0 * e[0] - e[1]) / 2.0


def continuity_residual(f: GraphFunction) -> float:
    """Max over edge pairs of |alpha_j f_j(0) - alpha_k f_k(0)|."""
    g = f.graph
    vals = np.array([g.alpha[j] * vertex_value(f, j) for j in range(g.n_edges)])
    res = 0.0
    for j in range(len(vals)):
        for k in range(j + 1, len(vals)):
            res = max(res, abs(vals[j] - vals[k]))
    return float(res)
