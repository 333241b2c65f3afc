"""Linearized operators about the shifted states and their spectra.

About Phi_omega(.; a) the real and imaginary parts of a perturbation feel

    L-(omega, a) = -Lap + omega - 2 alpha^2 Phi_omega(.; a)^2
    L+(omega, a) = -Lap + omega - 6 alpha^2 Phi_omega(.; a)^2,

self-adjoint on the graph with the vertex conditions; componentwise the
potentials are edge-independent because alpha_j^2 Phi_j^2 = omega sech^2.
Discretization reuses the evolution scheme's ghost-point vertex closure and
leaf Dirichlet reflection, so operators and time flow see the same boundary.

Known spectrum of L+ at omega = 1: a simple eigenvalue -3 (ground state),
an eigenvalue 0 (simple for a != 0, multiplicity N-1 at a = 0), and an
internal eigenvalue lambda_1(a) of multiplicity N-2 for a < a* =
arctanh(1/sqrt(3)); the continuous spectrum starts at omega.  Two printed
closed forms for lambda_1 circulate (sech vs sech^2 under the square root);
both are implemented and the discretized operator is the arbiter.

The half-soliton kernel basis (a = 0):

    U^(1) = phi_omega' (alpha_1^{-1}, ..., alpha_N^{-1})
    U^(j) = phi_omega' (0,...,0, r_j, alpha_{j+1}^{-1}, ..., alpha_N^{-1}),
            r_j = -(sum_{i>j} alpha_i^{-2}) alpha_j
    W^(j) = chi_omega e_j,  chi_omega(x) = -x phi_omega(x) / 2,

with overlaps M_j = <U^(j), W^(j)>, cubic coefficients R_j, P_k, and the
scalars D_1 = -1/(2 alpha_1^2 sqrt(omega)), D_2 = sqrt(omega)/alpha_1^2.
Every coefficient is computed both by quadrature and by its closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .functionals import l2_inner
from .graph import GraphFunction, StarGraph
from .states import sech_profile, shifted_state_family

A_STAR = math.atanh(1.0 / math.sqrt(3.0))

_DENSE_LIMIT = 3000


class BalanceError(ValueError):
    """Operation requires a balanced graph."""


class EigensolverError(RuntimeError):
    """Sparse eigensolver failed to converge."""


@dataclass
class LinearizedOperator:
    kind: str                 # "plus" or "minus"
    omega: float
    a: float
    graph: StarGraph
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def _node_weights(g: StarGraph) -> np.ndarray:
    return np.concatenate([np.full(len(g.x[j]), g.dx[j]) for j in range(g.n_edges)])


def assemble(kind: str, g: StarGraph, omega: float, a: float) -> LinearizedOperator:
    """Second-order FD matrix of L+/- with the evolve-identical vertex closure.

    Assembled in symmetrized form D^{1/2} A D^{-1/2} (D = node quadrature
    weights), exactly symmetric entry by entry; for uniform dx this is the
    plain FD matrix.
    """
    if kind not in ("plus", "minus"):
        raise ValueError("kind must be 'plus' or 'minus'")
    if omega <= 0:
        raise ValueError("omega must be positive")
    cubic = 6.0 if kind == "plus" else 2.0

    n = g.n_total
    offsets = np.concatenate(([0], np.cumsum(g.m)))
    rows, cols, vals = [], [], []

    for j in range(g.n_edges):
        s = offsets[j]
        mj = len(g.x[j])
        dx2 = g.dx[j] ** 2
        # potential: omega - cubic * alpha_j^2 Phi_j^2 = omega - cubic * omega sech^2
        pot = omega - cubic * sech_profile(g.x[j], omega, a, "phi") ** 2
        diag = 2.0 / dx2 + pot
        idx = s + np.arange(mj)
        rows.extend(idx); cols.extend(idx); vals.extend(diag)
        # leaf Dirichlet reflection folds +1/dx^2 into the last diagonal
        rows.append(s + mj - 1); cols.append(s + mj - 1); vals.append(1.0 / dx2)
        off = -1.0 / dx2
        rows.extend(idx[:-1]); cols.extend(idx[1:]); vals.extend(np.full(mj - 1, off))
        rows.extend(idx[1:]); cols.extend(idx[:-1]); vals.extend(np.full(mj - 1, off))

    # vertex ghost closure: -Lap at node (j,0) gains -C[j,m]/dx_j^2 at (m,0);
    # symmetrized entry: -2/(alpha_j alpha_m S) dx_j^{-3/2} dx_m^{-3/2} + delta/dx_j^2
    big_s = float(np.sum(1.0 / (g.alpha ** 2 * g.dx)))
    for j in range(g.n_edges):
        for m in range(g.n_edges):
            val = -2.0 / (g.alpha[j] * g.alpha[m] * big_s
                          * g.dx[j] ** 1.5 * g.dx[m] ** 1.5)
            if j == m:
                val += 1.0 / g.dx[j] ** 2
            rows.append(offsets[j]); cols.append(offsets[m]); vals.append(val)

    mat = sp.csr_matrix(
        sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))
    return LinearizedOperator(kind=kind, omega=omega, a=a, graph=g, matrix=mat)


def apply_operator(op: LinearizedOperator, f: GraphFunction) -> GraphFunction:
    """L f for a sampled function (undoing the similarity weighting)."""
    w = np.sqrt(_node_weights(op.graph))
    out = (op.matrix @ (w * f.pack())) / w
    return GraphFunction.unpack(op.graph, out)


def _sign_fix(vec: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(vec) > 1e-8 * np.max(np.abs(vec)))
    if len(big) and vec[big[0]] < 0:
        return -vec
    return vec


def eigenpairs(op: LinearizedOperator, k: int):
    """k algebraically smallest eigenpairs, ascending, quadrature-normalized.

    Dense symmetric solve at desk scale; shift-invert Lanczos (sigma below
    the bottom of the spectrum, fixed start vector for determinism) beyond.
    """
    if k > op.dimension:
        raise ValueError("k exceeds operator dimension")
    amat = op.matrix
    if op.dimension <= _DENSE_LIMIT:
        evals, evecs = np.linalg.eigh(amat.toarray())
        evals, evecs = evals[:k], evecs[:, :k]
    else:
        sigma = -4.0 * op.omega
        try:
            evals, evecs = spla.eigsh(
                amat, k=k, sigma=sigma, which="LM",
                v0=np.ones(op.dimension) / np.sqrt(op.dimension))
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(
                f"shift-invert Lanczos did not converge: {exc}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    w = np.sqrt(_node_weights(op.graph))
    out = []
    for i in range(k):
        vec = _sign_fix(evecs[:, i]) / w     # back to function space
        out.append((float(evals[i]), GraphFunction.unpack(op.graph, vec)))
    return out


def lambda1_closed_form(a: float, variant: str = "sech_squared") -> float:
    """Closed-form internal eigenvalue of L+(1, a), a < a*.

    variant "as_printed" uses sqrt(1 + 3 sech a); "sech_squared" uses
    sqrt(1 + 3 sech^2 a) (= 4 - 3 tanh^2 a), which reaches exactly 1 at a*.
    """
    t = math.tanh(a)
    if variant == "as_printed":
        root = math.sqrt(1.0 + 3.0 / math.cosh(a))
    elif variant == "sech_squared":
        root = math.sqrt(1.0 + 3.0 / math.cosh(a) ** 2)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return -1.5 * t * (t - root)


def lambda1_eigenpair(g: StarGraph, omega: float, a: float, k: int = 6):
    """Numeric (lambda_1, eigenvector) of L+(omega, a), normalized, sign-fixed.

    Identified among the k smallest eigenpairs as the discrete eigenvalue
    (below the continuum edge omega) whose eigenvector carries the least
    mass on the incoming edge - the lambda_1 eigenfunctions vanish there.
    The returned eigenvector has its edge-3 component positive near the
    vertex (so edge 2 is negative for N = 3).
    """
    from .functionals import mass as _mass

    op = assemble("plus", g, omega, a)
    pairs = eigenpairs(op, k)
    best = None
    for lam, vec in pairs:
        if lam >= omega * (1.0 - 1e-9):
            continue
        m1 = g.dx[0] * float(np.sum(vec.edges[0] ** 2))
        frac = m1 / _mass(vec)
        if best is None or frac < best[0]:
            best = (frac, lam, vec)
    if best is None:
        raise EigensolverError("no discrete eigenvalue below the continuum edge")
    _, lam, vec = best
    vec = vec / np.sqrt(_mass(vec))
    if len(vec.edges) >= 3 and vec.edges[2][0] < 0:
        vec = -vec
    return lam, vec


PHI_CUBED_INTEGRAL = -1.0 / 12.0   # int_0^inf phi (phi')^3 dx at omega = 1


@dataclass
class KernelBasis:
    """Half-soliton kernel data: closed forms plus quadrature counterparts."""

    graph: StarGraph
    omega: float
    u: list                    # U^(1..N-1) as GraphFunctions
    w: list                    # W^(1..N-1)
    m: np.ndarray              # overlaps M_j (closed form)
    r: np.ndarray              # self-cubic R_j (closed form; R_1 = 0 balanced)
    p: np.ndarray              # cross-cubic P_k (closed form; index 0 unused)
    d1: float
    d2: float
    m_quad: np.ndarray
    r_quad: np.ndarray
    p_quad: np.ndarray
    d1_quad: float
    d2_quad: float
    phi_cubed: float           # int_0^inf phi_omega (phi_omega')^3 dx
    phi_cubed_quad: float


def kernel_coefficient_vectors(g: StarGraph) -> list[np.ndarray]:
    """The x-independent vectors e_j with U^(j) = phi' e_j, j = 1..N-1."""
    n = g.n_edges
    inv = 1.0 / g.alpha
    vecs = [inv.copy()]
    for j in range(2, n):      # 1-based mode index j = 2..N-1
        e = np.zeros(n)
        tail = float(np.sum(inv[j:] ** 2))
        e[j - 1] = -tail * g.alpha[j - 1]
        e[j:] = inv[j:]
        vecs.append(e)
    return vecs


def kernel_basis(g: StarGraph, omega: float = 1.0) -> KernelBasis:
    """Closed-form kernel basis of L+(omega) at a = 0 with all overlaps.

    Requires a balanced graph: the r_j construction and R_1 = 0 rest on the
    balance constraint.
    """
    if not g.balanced:
        raise BalanceError(
            f"kernel basis needs a balanced graph (residual {g.balance_residual:.3e})")
    if omega <= 0:
        raise ValueError("omega must be positive")
    n = g.n_edges
    vecs = kernel_coefficient_vectors(g)
    phi_d = [sech_profile(g.x[j], omega, 0.0, "dx") for j in range(n)]
    chi = [-0.5 * g.x[j] * sech_profile(g.x[j], omega, 0.0, "phi")
           for j in range(n)]
    us = [GraphFunction(g, [e[j] * phi_d[j] for j in range(n)]) for e in vecs]
    ws = [GraphFunction(g, [e[j] * chi[j] for j in range(n)]) for e in vecs]

    inv2 = 1.0 / g.alpha ** 2
    sqw = math.sqrt(omega)
    phi_cubed = omega ** 3 * PHI_CUBED_INTEGRAL
    m_cf = np.empty(n - 1)
    r_cf = np.empty(n - 1)
    p_cf = np.empty(n - 1)
    for jj in range(1, n):     # 1-based mode index j = 1..N-1
        s_from = float(np.sum(inv2[jj - 1:]))
        s_after = float(np.sum(inv2[jj:]))
        a_j2 = g.alpha[jj - 1] ** 2
        m_cf[jj - 1] = 0.25 * a_j2 * s_from * s_after * sqw
        r_cf[jj - 1] = (a_j2 ** 2 * s_from * s_after
                        * (inv2[jj - 1] - s_after) * phi_cubed)
        p_cf[jj - 1] = a_j2 * s_from * s_after * phi_cubed
    p_cf[0] = 0.0              # P_k defined for k >= 2 only

    def cubic_pair(uj: GraphFunction, uk: GraphFunction) -> float:
        phi = shifted_state_family(g, omega, 0.0, "phi")
        total = 0.0
        for j in range(n):
            total += g.dx[j] * g.alpha[j] ** 2 * np.sum(
                phi.edges[j] * uj.edges[j] * uk.edges[j] ** 2)
        return float(total)

    m_q = np.array([np.real(l2_inner(us[i], ws[i])) for i in range(n - 1)])
    r_q = np.array([cubic_pair(us[i], us[i]) for i in range(n - 1)])
    p_q = np.zeros(n - 1)
    for kk in range(1, n - 1):
        p_q[kk] = cubic_pair(us[0], us[kk])   # any j < k gives the same value

    phi0 = shifted_state_family(g, omega, 0.0, "phi")
    dphi0 = shifted_state_family(g, omega, 0.0, "domega")
    xphi0 = shifted_state_family(g, omega, 0.0, "xphi")
    phi_x0 = shifted_state_family(g, omega, 0.0, "dx")
    d1_q = -float(np.real(l2_inner(phi0, dphi0)))
    d2_q = -float(np.real(l2_inner(phi_x0, xphi0)))
    pc_q = float(g.dx[1] * np.sum(
        sech_profile(g.x[1], omega, 0.0, "phi")
        * sech_profile(g.x[1], omega, 0.0, "dx") ** 3))

    return KernelBasis(
        graph=g, omega=omega, u=us, w=ws,
        m=m_cf, r=r_cf, p=p_cf,
        d1=-1.0 / (2.0 * g.alpha[0] ** 2 * sqw),
        d2=sqw / g.alpha[0] ** 2,
        m_quad=m_q, r_quad=r_q, p_quad=p_q,
        d1_quad=d1_q, d2_quad=d2_q,
        phi_cubed=phi_cubed, phi_cubed_quad=pc_q,
    )
