"""Discrete conserved quantities and inner products on the star graph.

Quadrature is the composite midpoint rule (the grid is staggered, so every
node is the midpoint of its cell): integral ~ dx * sum over nodes.
Derivatives are centered differences; at the vertex the stencil is closed
with the same ghost values the evolution scheme uses, and at the leaf with
the Dirichlet reflection f_{M+1} = -f_M.

Functionals:
    Q(Psi)  = ||Psi||^2                      (mass)
    E(Psi)  = ||Psi'||^2 - sum_j alpha_j^2 int |psi_j|^4   (energy)
    P(Psi)  = Im <Psi', Psi>                 (momentum, <u,v> = int u conj(v))
    Lambda_omega = E + omega Q               (action)

and the vertex momentum flux

    dP/dt = 1/2 sum_{j,i>=2, i!=j} alpha_1^2/(alpha_j^2 alpha_i^2)
            |alpha_j psi_j'(0) - alpha_i psi_i'(0)|^2  >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphFunction, continuity_residual, ghost_values


def l2_inner(f: GraphFunction, g: GraphFunction) -> complex:
    """Discrete L^2(Gamma) pairing, linear in f, conjugate-linear in g."""
    gr = f.graph
    return complex(sum(
        gr.dx[j] * np.sum(f.edges[j] * np.conj(g.edges[j]))
        for j in range(gr.n_edges)
    ))


def mass(f: GraphFunction) -> float:
    gr = f.graph
    return float(sum(gr.dx[j] * np.sum(np.abs(f.edges[j]) ** 2)
                     for j in range(gr.n_edges)))


def derivative(f: GraphFunction) -> GraphFunction:
    """Centered-difference x-derivative with ghost closure at the vertex.

    Node positions on the incoming edge decrease with index, so the
    difference quotient carries the edge orientation sign.
    """
    g = f.graph
    ghosts = ghost_values(f)
    signs = g.signs()
    out = []
    for j in range(g.n_edges):
        e = f.edges[j]
        d = np.empty_like(e)
        d[1:-1] = e[2:] - e[:-2]
        d[0] = e[1] - ghosts[j]
        d[-1] = -e[-1] - e[-2]
        # index runs away from the vertex: d/dx = sign * d/d(index)
        out.append(signs[j] * d / (2.0 * g.dx[j]))
    return GraphFunction(g, out)


def energy(f: GraphFunction) -> float:
    g = f.graph
    df = derivative(f)
    kin = mass(df)
    quartic = float(sum(
        g.dx[j] * g.alpha[j] ** 2 * np.sum(np.abs(f.edges[j]) ** 4)
        for j in range(g.n_edges)
    ))
    return kin - quartic


def action(f: GraphFunction, omega: float) -> float:
    return energy(f) + omega * mass(f)


def momentum(f: GraphFunction) -> float:
    return float(np.imag(l2_inner(derivative(f), f)))


def vertex_derivatives(f: GraphFunction) -> np.ndarray:
    """psi_j'(0) per edge from the ghost construction (one-sided, O(dx^2))."""
    g = f.graph
    ghosts = ghost_values(f)
    first = np.array([f.edges[j][0] for j in range(g.n_edges)])
    d_index = (first - ghosts) / g.dx          # derivative along the index axis
    return g.signs() * d_index


def momentum_flux(f: GraphFunction) -> float:
    """Instantaneous dP/dt from the vertex-flux formula (nonnegative)."""
    g = f.graph
    d = vertex_derivatives(f)
    a = g.alpha
    total = 0.0
    for j in range(1, g.n_edges):
        for i in range(1, g.n_edges):
            if i == j:
                continue
            total += (a[0] ** 2 / (a[j] ** 2 * a[i] ** 2)
                      * abs(a[j] * d[j] - a[i] * d[i]) ** 2)
    return 0.5 * total


def h1_norm(f: GraphFunction) -> float:
    """Discrete H^1-type norm: sqrt(||f||^2 + ||f'||^2)."""
    return float(np.sqrt(mass(f) + mass(derivative(f))))


def max_position(f: GraphFunction):
    """(edge, x) of the maximum of |u| = |alpha_j psi_j|.

    Ties resolve to the smallest edge index, then the smallest |x|; the
    scan order (edges ascending, nodes vertex-out) realizes exactly that.
    """
    g = f.graph
    best = (-1.0, 0, 0.0)
    for j in range(g.n_edges):
        u = g.alpha[j] * np.abs(f.edges[j])
        k = int(np.argmax(u))          # first occurrence = smallest |x|
        if u[k] > best[0]:
            best = (float(u[k]), j, float(g.x[j][k]))
    return best[1], best[2]


def asymmetry(f: GraphFunction) -> float:
    """||u_2|| - ||u_3|| over the outgoing edges (u_j = alpha_j psi_j)."""
    g = f.graph
    n2 = np.sqrt(g.dx[1] * np.sum(np.abs(g.alpha[1] * f.edges[1]) ** 2))
    n3 = np.sqrt(g.dx[2] * np.sum(np.abs(g.alpha[2] * f.edges[2]) ** 2))
    return float(n2 - n3)


@dataclass
class Diagnostics:
    t: float
    mass: float
    energy: float
    momentum: float
    flux: float
    max_edge: int
    max_pos: float
    asymmetry: float
    continuity_residual: float

    CSV_FIELDS = ("t", "mass", "energy", "momentum", "flux",
                  "max_edge", "max_pos", "asymmetry", "continuity_residual")

    def row(self):
        return [getattr(self, name) for name in self.CSV_FIELDS]


def diagnostics(f: GraphFunction, t: float) -> Diagnostics:
    edge, pos = max_position(f)
    return Diagnostics(
        t=t,
        mass=mass(f),
        energy=energy(f),
        momentum=momentum(f),
        flux=momentum_flux(f),
        max_edge=edge + 1,            # 1-based in reports
        max_pos=pos,
        asymmetry=asymmetry(f),
        continuity_residual=continuity_residual(f),
    )
