"""Modulation-parameter extraction by symplectic orthogonality.

A snapshot close to the standing-wave orbit decomposes uniquely as

    Psi = e^{i theta} [ Phi_omega(.; a) + U + i W ]

with real remainders satisfying the orthogonality constraints

    <W, d_omega Phi_omega> = 0,  <U, Phi_omega> = 0,  <U, (.+a) Phi_omega> = 0.

decompose() solves the constraint system G(theta, omega, a; Psi) = 0 by
Newton iteration with the exact analytic Jacobian (closed-form derivatives
of the profile); at the orbit the Jacobian is diag(D1, D1, D2).  The
half-soliton mode fixes a = 0 and drops the third constraint; there the
remainders are additionally projected on the kernel bases,

    c_j = <U, W^(j)> / M_j,   b_j = <W, U^(j)> / M_j,

which feed the reduced Hamiltonian system.

track() runs warm-started fits along a snapshot series and evaluates the
leading-order drift law  a_dot = -alpha_1^2 omega^{-1/2} P(Psi)  for
comparison with the fitted da/dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functionals import h1_norm, momentum
from .graph import GraphFunction, StarGraph
from .spectral import KernelBasis, kernel_basis
from .states import shifted_state_family

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50


def _rinner(f: GraphFunction, g: GraphFunction) -> float:
    gr = f.graph
    return float(sum(gr.dx[j] * np.sum(f.edges[j] * g.edges[j])
                     for j in range(gr.n_edges)))


@dataclass
class ModulationFit:
    theta: float
    omega: float
    a: float
    remainder_norm: float
    residual: float
    converged: bool
    iterations: int = 0
    u: GraphFunction = field(default=None, repr=False)
    w: GraphFunction = field(default=None, repr=False)


def _family(g: StarGraph, omega: float, a: float):
    phi = shifted_state_family(g, omega, a, "phi")
    return {
        "phi": phi,
        "dx": shifted_state_family(g, omega, a, "dx"),
        "dw": shifted_state_family(g, omega, a, "domega"),
        "d2w": shifted_state_family(g, omega, a, "d2omega"),
        "dwdx": shifted_state_family(g, omega, a, "domega_dx"),
        "xphi": shifted_state_family(g, omega, a, "xphi"),
    }


def decompose(f: GraphFunction, guess=(0.0, 1.0, 0.0),
              half_soliton: bool = False, tol: float = NEWTON_TOL,
              max_iter: int = NEWTON_MAX_ITER) -> ModulationFit:
    """Newton solve of the orthogonality system from the given guess.

    Returns converged=False (with the last iterate) when the snapshot is
    outside the basin: no convergence within max_iter, or the parameters
    wander off (omega <= 0).
    """
    g = f.graph
    theta, omega, a = float(guess[0]), float(guess[1]), float(guess[2])
    if half_soliton:
        a = 0.0
    u = w = None
    residual = np.inf
    for it in range(1, max_iter + 1):
        if not (1e-3 < omega < 1e3) or abs(a) > 10.0 * g.edge_length:
            return ModulationFit(theta, omega, a, np.inf, residual, False, it)
        fam = _family(g, omega, a)
        zeta = f * np.exp(-1j * theta)
        u = zeta.real - fam["phi"]
        w = zeta.imag
        g1 = _rinner(w, fam["dw"])
        g2 = _rinner(u, fam["phi"])
        g3 = _rinner(u, fam["xphi"])
        vec = np.array([g1, g2, g3])
        residual = float(np.max(np.abs(vec[:2] if half_soliton else vec)))
        if residual <= tol:
            return ModulationFit(
                theta, omega, a, h1_norm(u + w * 1j), residual, True, it, u, w)
        re_zeta = u + fam["phi"]
        jac = np.empty((3, 3))
        jac[0, 0] = -_rinner(re_zeta, fam["dw"])
        jac[0, 1] = _rinner(w, fam["d2w"])
        jac[0, 2] = _rinner(w, fam["dwdx"])
        jac[1, 0] = _rinner(w, fam["phi"])
        jac[1, 1] = _rinner(u, fam["dw"]) - _rinner(fam["phi"], fam["dw"])
        jac[1, 2] = _rinner(u, fam["dx"]) - _rinner(fam["phi"], fam["dx"])
        jac[2, 0] = _rinner(w, fam["xphi"])
        jac[2, 1] = _rinner(u, _xdw(g, omega, a)) - _rinner(fam["dw"], fam["xphi"])
        jac[2, 2] = (_rinner(u, fam["phi"]) + _rinner(u, _xdx(g, omega, a))
                     - _rinner(fam["dx"], fam["xphi"]))
        try:
            if half_soliton:
                step = np.linalg.solve(jac[:2, :2], -vec[:2])
                step = np.array([step[0], step[1], 0.0])
            else:
                step = np.linalg.solve(jac, -vec)
        except np.linalg.LinAlgError:
            return ModulationFit(theta, omega, a, np.inf, residual, False, it)
        theta += step[0]
        omega += step[1]
        a += step[2]
    rem = h1_norm(u + w * 1j) if u is not None else np.inf
    return ModulationFit(theta, omega, a, rem, residual, False, max_iter, u, w)


def _xdw(g: StarGraph, omega: float, a: float) -> GraphFunction:
    """(x + a) * d_omega Phi_omega, sampled."""
    dw = shifted_state_family(g, omega, a, "domega")
    return GraphFunction(g, [(g.x[j] + a) * dw.edges[j] for j in range(g.n_edges)])


def _xdx(g: StarGraph, omega: float, a: float) -> GraphFunction:
    """(x + a) * Phi_omega', sampled."""
    dx = shifted_state_family(g, omega, a, "dx")
    return GraphFunction(g, [(g.x[j] + a) * dx.edges[j] for j in range(g.n_edges)])


def kernel_projections(fit: ModulationFit, basis: KernelBasis):
    """(c, b) coefficients of the remainders on the kernel bases."""
    nm1 = basis.graph.n_edges - 1
    c = np.array([_rinner(fit.u, basis.w[j]) / basis.m[j] for j in range(nm1)])
    b = np.array([_rinner(fit.w, basis.u[j]) / basis.m[j] for j in range(nm1)])
    return c, b


@dataclass
class ModulationTrack:
    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    a: np.ndarray
    remainder_norm: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    a_dot_fit: np.ndarray
    a_dot_pred: np.ndarray
    c: np.ndarray = None       # (n, N-1) in half-soliton mode
    b: np.ndarray = None
    complete: bool = True      # False when truncated at a non-converged fit

    def __len__(self):
        return len(self.t)


def track(snapshots, guess=(0.0, 1.0, 0.0), half_soliton: bool = False,
          basis: KernelBasis | None = None) -> ModulationTrack:
    """Fit the modulation parameters along a list of (t, GraphFunction).

    Warm-starts each Newton solve from the previous fit and truncates the
    track at the last converged snapshot.  a_dot_fit is a centered
    difference of the fitted a(t); a_dot_pred the drift law
    -alpha_1^2 omega^{-1/2} P.
    """
    rows = []
    cur = tuple(guess)
    cs, bs = [], []
    complete = True
    for t, f in snapshots:
        fit = decompose(f, cur, half_soliton=half_soliton)
        if not fit.converged:
            complete = False
            break
        cur = (fit.theta, fit.omega, fit.a)
        p = momentum(f)
        a1 = f.graph.alpha[0]
        pred = -a1 ** 2 * fit.omega ** -0.5 * p
        rows.append((t, fit.theta, fit.omega, fit.a, fit.remainder_norm,
                     fit.residual, pred))
        if half_soliton:
            if basis is None or abs(basis.omega - fit.omega) > 1e-9:
                basis = kernel_basis(f.graph, fit.omega)
            cj, bj = kernel_projections(fit, basis)
            cs.append(cj)
            bs.append(bj)
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, 7))
    t, theta, omega, a = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    a_dot = np.gradient(a, t) if len(a) >= 2 else np.zeros_like(a)
    return ModulationTrack(
        t=t, theta=theta, omega=omega, a=a,
        remainder_norm=arr[:, 4], residual=arr[:, 5],
        converged=np.ones(len(arr), dtype=bool),
        a_dot_fit=a_dot, a_dot_pred=arr[:, 6],
        c=np.array(cs) if cs else None,
        b=np.array(bs) if bs else None,
        complete=complete,
    )
