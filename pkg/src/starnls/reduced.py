"""The finite-dimensional Hamiltonian system governing half-soliton escape.

Coordinates (gamma, beta) in R^{N-1} x R^{N-1} with Hamiltonian

    H0 =     1/2 sum_j M_j beta_j^2
         - 2 sum_{j>=2} R_j gamma_j^3
         - 6 sum_j sum_{k>j} P_k gamma_j gamma_k^2

and equations of motion M_j dgamma_j/dt = dH0/dbeta_j (so gamma_j' =
beta_j) and M_j dbeta_j/dt = -dH0/dgamma_j, equivalently the second-order
form

    M_j gamma_j'' = 6 R_j gamma_j^2 + 12 P_j gamma_j sum_{i<j} gamma_i
                    + 6 sum_{k>j} P_k gamma_k^2.

On balanced graphs R_1 = 0 and every P_k < 0.  The plane
S = {gamma_1 = C gamma_2, gamma_3 = ... = 0, beta parallel} is invariant
when C solves 2 M_1 P_2 C^2 + M_1 R_2 C - M_2 P_2 = 0 (discriminant
M_1^2 R_2^2 + 8 M_1 M_2 P_2^2 > 0); there gamma_1 obeys the cusp equation
C^2 M_1 gamma_1'' = 6 P_2 gamma_1^2, whose zero equilibrium escapes any
epsilon-ball in time t0 = O(epsilon^{-1/2}).

Integration is classical RK4 on the first-order form; the second-order
form serves as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import KernelBasis


@dataclass
class ReducedCoefficients:
    m: np.ndarray        # overlaps M_j > 0
    r: np.ndarray        # self-cubic R_j (R_1 = 0 on balanced graphs)
    p: np.ndarray        # cross-cubic P_k < 0 for k >= 2 (index 0 unused)

    @classmethod
    def from_kernel_basis(cls, kb: KernelBasis) -> "ReducedCoefficients":
        return cls(m=kb.m.copy(), r=kb.r.copy(), p=kb.p.copy())

    @property
    def dof(self) -> int:
        return len(self.m)


@dataclass
class ReducedState:
    gamma: np.ndarray
    beta: np.ndarray
    t: float = 0.0


def hamiltonian(s: ReducedState, c: ReducedCoefficients) -> float:
    gam, bet = s.gamma, s.beta
    if len(gam) != c.dof or len(bet) != c.dof:
        raise ValueError("state/coefficient dimension mismatch")
    h = 0.5 * float(np.dot(c.m, bet ** 2))
    h -= 2.0 * float(np.dot(c.r[1:], gam[1:] ** 3))
    for k in range(1, c.dof):
        h -= 6.0 * c.p[k] * float(np.sum(gam[:k])) * gam[k] ** 2
    return h


def _accel(gam: np.ndarray, c: ReducedCoefficients) -> np.ndarray:
    """gamma'' from the second-order form, divided by M."""
    n = len(gam)
    out = np.empty(n)
    prefix = np.concatenate(([0.0], np.cumsum(gam)[:-1]))   # sum_{i<j} gamma_i
    for j in range(n):
        acc = 6.0 * c.r[j] * gam[j] ** 2 + 12.0 * c.p[j] * gam[j] * prefix[j]
        if j + 1 < n:
            acc += 6.0 * float(np.dot(c.p[j + 1:], gam[j + 1:] ** 2))
        out[j] = acc / c.m[j]
    return out


def step(s: ReducedState, c: ReducedCoefficients, dt: float) -> ReducedState:
    """One classical RK4 step of the first-order system."""
    g0, b0 = s.gamma, s.beta
    k1g, k1b = b0, _accel(g0, c)
    k2g, k2b = b0 + 0.5 * dt * k1b, _accel(g0 + 0.5 * dt * k1g, c)
    k3g, k3b = b0 + 0.5 * dt * k2b, _accel(g0 + 0.5 * dt * k2g, c)
    k4g, k4b = b0 + dt * k3b, _accel(g0 + dt * k3g, c)
    return ReducedState(
        gamma=g0 + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g),
        beta=b0 + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b),
        t=s.t + dt,
    )


@dataclass
class Trajectory:
    t: np.ndarray
    gamma: np.ndarray      # (n, dof)
    beta: np.ndarray
    h0: np.ndarray
    blown_up: bool = False


def integrate(s0: ReducedState, c: ReducedCoefficients, t_end: float,
              dt: float, record_every: int = 1,
              overflow: float = 1e6) -> Trajectory:
    """RK4 up to t_end; truncates with blown_up=True on overflow."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_end / dt))
    s = ReducedState(s0.gamma.astype(float).copy(),
                     s0.beta.astype(float).copy(), s0.t)
    ts, gs, bs, hs = [s.t], [s.gamma.copy()], [s.beta.copy()], [hamiltonian(s, c)]
    blown = False
    for i in range(1, n_steps + 1):
        s = step(s, c, dt)
        big = max(np.max(np.abs(s.gamma)), np.max(np.abs(s.beta)))
        if not np.isfinite(big) or big > overflow:
            blown = True
            break
        if i % record_every == 0 or i == n_steps:
            ts.append(s.t); gs.append(s.gamma.copy())
            bs.append(s.beta.copy()); hs.append(hamiltonian(s, c))
    return Trajectory(np.array(ts), np.array(gs), np.array(bs),
                      np.array(hs), blown)


def cusp_constant(c: ReducedCoefficients):
    """Both roots of 2 M1 P2 C^2 + M1 R2 C - M2 P2 = 0 (always real, nonzero)."""
    m1, m2 = c.m[0], c.m[1]
    r2, p2 = c.r[1], c.p[1]
    disc = m1 ** 2 * r2 ** 2 + 8.0 * m1 * m2 * p2 ** 2
    sq = np.sqrt(disc)
    return ((-m1 * r2 + sq) / (4.0 * m1 * p2),
            (-m1 * r2 - sq) / (4.0 * m1 * p2))


def invariant_subspace_state(c: ReducedCoefficients, delta: float,
                             velocity_fraction: float = 0.75) -> ReducedState:
    """Initial point on S with ||gamma(0)|| + ||beta(0)|| = delta.

    gamma_1(0) < 0 (the direction the cusp drives downward, P_2 < 0) and a
    beta budget along the same ray: the escape-time scaling t0 =
    O(eps^{-1/2}) requires beta_1(0) = O(delta) nonzero, matching the
    construction in the instability proof.
    """
    roots = cusp_constant(c)
    cpos = max(roots)          # positive root
    direction = np.zeros(c.dof)
    direction[0] = cpos
    direction[1] = 1.0
    direction /= np.linalg.norm(direction)
    gam = -delta * (1.0 - velocity_fraction) * direction
    bet = -delta * velocity_fraction * direction
    return ReducedState(gamma=gam, beta=bet, t=0.0)


def compare_pde_ode(g, c0_amplitude: float = 0.05, t_end: float = 10.0,
                    dt: float = 0.002, output_every: int = 50) -> dict:
    """Shadowing check: half-soliton PDE run vs the reduced system.

    Perturbs the half-soliton along the second kernel direction,
    Psi_0 = Phi + c0 U^(2), runs the PDE, projects snapshots onto (c, b) in
    half-soliton mode, and integrates the reduced system from the same
    initial projection.  Reports the trajectories and their max deviation;
    qualitative by design (the shadowing bounds are only O(eps^{3/2})).
    """
    from .evolve import Stepper
    from .modulation import track
    from .spectral import kernel_basis
    from .states import shifted_state

    kb = kernel_basis(g, 1.0)
    f0 = shifted_state(g, 1.0, 0.0) + kb.u[1].astype(complex) * c0_amplitude
    snaps = []
    stepper = Stepper(g, dt)
    stepper.run(f0.astype(complex), t_end,
                observer=lambda t, f: snaps.append((t, f)),
                output_every=output_every)
    tr = track(snaps, guess=(0.0, 1.0, 0.0), half_soliton=True, basis=kb)
    coeffs = ReducedCoefficients.from_kernel_basis(kb)
    s0 = ReducedState(gamma=tr.c[0].copy(), beta=tr.b[0].copy())
    n_rec = max(1, int(round((tr.t[1] - tr.t[0]) / dt))) if len(tr.t) > 1 else 1
    ode = integrate(s0, coeffs, tr.t[-1], dt, record_every=n_rec)
    n = min(len(tr.t), len(ode.t))
    dev = float(np.max(np.abs(tr.c[:n] - ode.gamma[:n])))
    return {
        "t": tr.t[:n], "c_pde": tr.c[:n], "b_pde": tr.b[:n],
        "c_ode": ode.gamma[:n], "b_ode": ode.beta[:n],
        "max_c_deviation": dev, "track_complete": tr.complete,
    }


@dataclass
class EscapeResult:
    t_escape: float
    escaped: bool
    trajectory: Trajectory


def escape_time(eps: float, delta: float, c: ReducedCoefficients,
                dt: float | None = None, t_max: float | None = None) -> EscapeResult:
    """First time ||gamma(t)|| = eps from the delta-ball start on S.

    t_max defaults to 100 eps^{-1/2} (an order of magnitude above the
    predicted scaling); a run that never escapes returns escaped=False.
    """
    if not (0 < delta < eps):
        raise ValueError("need 0 < delta < eps")
    scale = eps ** -0.5
    if dt is None:
        dt = 1e-3 * scale
    if t_max is None:
        t_max = 100.0 * scale
    s = invariant_subspace_state(c, delta)
    n_steps = int(np.ceil(t_max / dt))
    prev_norm = float(np.linalg.norm(s.gamma))
    ts, gs, bs, hs = [0.0], [s.gamma.copy()], [s.beta.copy()], [hamiltonian(s, c)]
    for i in range(1, n_steps + 1):
        s = step(s, c, dt)
        norm = float(np.linalg.norm(s.gamma))
        ts.append(s.t); gs.append(s.gamma.copy())
        bs.append(s.beta.copy()); hs.append(hamiltonian(s, c))
        if norm >= eps:
            # linear interpolation of the crossing inside the last step
            frac = (eps - prev_norm) / max(norm - prev_norm, 1e-300)
            t0 = s.t - dt + frac * dt
            traj = Trajectory(np.array(ts), np.array(gs), np.array(bs),
                              np.array(hs))
            return EscapeResult(t_escape=float(t0), escaped=True, trajectory=traj)
        prev_norm = norm
    traj = Trajectory(np.array(ts), np.array(gs), np.array(bs), np.array(hs))
    return EscapeResult(t_escape=float("inf"), escaped=False, trajectory=traj)
