"""Standing waves, travelling solitons, and perturbed initial data.

The shifted-state family on a balanced star graph is

    Phi_omega(x; a)_j = alpha_j^{-1} sqrt(omega) sech(sqrt(omega) (x + a)),

a standing wave of i Psi_t = -Psi'' - 2 alpha^2 |Psi|^2 Psi rotating as
e^{i omega t}.  The closed-form omega- and a-derivatives of that profile are
also provided here; the modulation module consumes them.
"""

from __future__ import annotations

import warnings

import numpy as np

from .graph import GraphFunction, StarGraph


def _sech(z):
    return 1.0 / np.cosh(z)


def sech_profile(x, omega: float, a: float, deriv: str = "phi") -> np.ndarray:
    """Line profile phi_omega(x + a) = sqrt(omega) sech(sqrt(omega)(x+a)) and
    its derivatives, unweighted by alpha.

    deriv selects: "phi", "dx" (x-derivative), "domega", "d2omega",
    "domega_dx" (mixed), "xphi" ((x+a) * phi).
    """
    s = np.sqrt(omega)
    y = np.asarray(x) + a
    z = s * y
    sech = _sech(z)
    tanh = np.tanh(z)
    if deriv == "phi":
        return s * sech
    if deriv == "dx":
        return -omega * sech * tanh
    if deriv == "xphi":
        return y * s * sech
    # sech'(z) = -sech tanh;  sech''(z) = sech (1 - 2 sech^2)
    dsech = -sech * tanh
    d2sech = sech * (1.0 - 2.0 * sech**2)
    if deriv == "domega":
        return (sech + z * dsech) / (2.0 * s)
    if deriv == "d2omega":
        return (-sech + z * dsech + z**2 * d2sech) / (4.0 * omega * s)
    if deriv == "domega_dx":
        return 0.5 * (2.0 * dsech + z * d2sech)
    raise ValueError(f"unknown deriv {deriv!r}")


def shifted_state_family(g: StarGraph, omega: float, a: float, deriv: str = "phi") -> GraphFunction:
    """Sample Phi_omega(.; a) (or one of its closed-form derivatives) on g.

    Every component carries the weight alpha_j^{-1}.
    """
    return GraphFunction(
        g,
        [sech_profile(g.x[j], omega, a, deriv) / g.alpha[j] for j in range(g.n_edges)],
    )


def shifted_state(g: StarGraph, omega: float = 1.0, a: float = 0.0,
                  theta: float = 0.0) -> GraphFunction:
    """The shifted standing wave e^{i theta} Phi_omega(.; a)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if not g.balanced:
        warnings.warn(
            "graph is not balanced: the sampled profile is not a steady state",
            stacklevel=2,
        )
    phi = shifted_state_family(g, omega, a, "phi")
    if theta == 0.0:
        return phi
    return phi * np.exp(1j * theta)


def line_soliton(g: StarGraph, v: float, x0: float, t: float = 0.0) -> GraphFunction:
    """alpha-symmetric lift of the travelling line soliton.

    Folded profile: sech(x - v t - x0) exp(i (v x / 2 + (1 - v^2/4) t)),
    placed as psi_j = alpha_j^{-1} phi on every edge.  At v = 0, t = 0 this
    reduces to shifted_state(omega=1, a=-x0).
    """
    def fn(j, x):
        return (_sech(x - v * t - x0)
                * np.exp(1j * (0.5 * v * x + (1.0 - 0.25 * v**2) * t))
                / g.alpha[j])
    return GraphFunction.from_callable(g, fn)


class EigenvalueMergedError(ValueError):
    """The internal eigenvalue lambda_1(a) no longer exists (a >= a*)."""


def eigenfunction_perturbed_state(g: StarGraph, a: float, eps: complex) -> GraphFunction:
    """Phi(.; a) + eps U_a with U_a the unit-norm lambda_1 eigenfunction.

    U_a is computed numerically from L_+(1, a); it exists for a < a* =
    arctanh(1/sqrt(3)).  Sign convention: the component on edge 3 (index 2)
    is positive near the vertex, so that for N = 3 the perturbation is
    negative on edge 2.  Such data have P(Psi_0) = 0 for any complex eps.
    """
    from . import spectral  # local import: spectral builds on states

    if a >= spectral.A_STAR:
        raise EigenvalueMergedError(
            f"a={a} >= a*~0.66: lambda_1 has merged into the continuous spectrum"
        )
    _, u_a = spectral.lambda1_eigenpair(g, 1.0, a)
    base = shifted_state(g, omega=1.0, a=a)
    if eps == 0:
        return base
    return base + u_a.astype(complex) * eps


def surrogate_perturbed_state(g: StarGraph, a: float, eps: complex,
                              lam: float = 1.0) -> GraphFunction:
    """Phi(.; a) + eps V with V = +-c x e^{-lam x} on the outgoing edges.

    Surrogate for the eigenfunction direction when a >= a*: zero on the
    incoming edge, sign-alternating across outgoing edges (negative on
    edge 2, positive on edge 3), normalized to unit discrete L2 norm.
    """
    from .functionals import mass

    edges = [np.zeros_like(g.x[0])]
    for j in range(1, g.n_edges):
        sign = -1.0 if j % 2 == 1 else 1.0
        edges.append(sign * g.x[j] * np.exp(-lam * g.x[j]))
    v = GraphFunction(g, edges)
    v = v / np.sqrt(mass(v))
    return shifted_state(g, omega=1.0, a=a) + v.astype(complex) * eps


def phase_modulated_state(g: StarGraph, a: float, mu: complex) -> GraphFunction:
    """Shifted state with phase factors e^{mu x} on edge 1 and e^{2 mu x} on
    edge 2; edges 3..N unmodified.

    Re(mu) != 0 changes amplitudes; a warning is issued if the amplification
    across the truncated edge exceeds 1e3.
    """
    amp = np.exp(2.0 * abs(np.real(mu)) * g.edge_length)
    if amp > 1e3:
        warnings.warn(
            f"phase factor amplifies by {amp:.3g} across the edge; "
            "the truncated profile is unreliable",
            stacklevel=2,
        )
    edges = []
    for j in range(g.n_edges):
        prof = sech_profile(g.x[j], 1.0, a, "phi") / g.alpha[j]
        if j == 0:
            prof = prof * np.exp(mu * g.x[j])
        elif j == 1:
            prof = prof * np.exp(2.0 * mu * g.x[j])
        edges.append(prof.astype(complex))
    return GraphFunction(g, edges)
