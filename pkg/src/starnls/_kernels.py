"""Hot numeric kernels for the time stepper.

Two interchangeable backends:

* "numba": @njit Thomas factorization/solve, tridiagonal apply, and the
  pointwise phase rotation, fused over all edges of the packed field;
* "numpy": vectorized numpy for the applies plus LAPACK zgttrf/zgttrs for
  the tridiagonal solves.

Selection: environment variable STARNLS_KERNELS = "numba" | "numpy"
(default: numba when importable).  benchmarks/bench_stepper.py compares the
two paths; they agree to solver roundoff.

All kernels operate on the packed field layout: one complex128 array
holding every edge back to back (near-vertex node first), with `offsets`
of length n_edges+1 delimiting the segments.  Boundary coefficients are
pre-zeroed (lo at each first node, up at each last node), so shifted
multiplies never bleed across edges.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import lapack as _lapack

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - mirror env always has numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


def _env_backend() -> str:
    req = os.environ.get("STARNLS_KERNELS", "").strip().lower()
    if req in ("numba", "numpy"):
        if req == "numba" and not NUMBA_AVAILABLE:
            raise RuntimeError("STARNLS_KERNELS=numba but numba is not importable")
        return req
    return "numba" if NUMBA_AVAILABLE else "numpy"


BACKEND = _env_backend()


def active_backend() -> str:
    return BACKEND


def use_numba() -> bool:
    return BACKEND == "numba" and NUMBA_AVAILABLE


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _nb_thomas_factor(offsets, dl, d, du, w, bt):
    for e in range(len(offsets) - 1):
        s, t = offsets[e], offsets[e + 1]
        bt[s] = d[s]
        for i in range(s + 1, t):
            w[i] = dl[i] / bt[i - 1]
            bt[i] = d[i] - w[i] * du[i - 1]


@njit(cache=True)
def _nb_thomas_solve(offsets, w, bt, du, rhs, out):
    for e in range(len(offsets) - 1):
        s, t = offsets[e], offsets[e + 1]
        out[s] = rhs[s]
        for i in range(s + 1, t):
            out[i] = rhs[i] - w[i] * out[i - 1]
        out[t - 1] = out[t - 1] / bt[t - 1]
        for i in range(t - 2, s - 1, -1):
            out[i] = (out[i] - du[i] * out[i + 1]) / bt[i]


@njit(cache=True)
def _nb_tri_apply(offsets, lo, di, up, f, out):
    for e in range(len(offsets) - 1):
        s, t = offsets[e], offsets[e + 1]
        for i in range(s, t):
            acc = di[i] * f[i]
            if i > s:
                acc += lo[i] * f[i - 1]
            if i < t - 1:
                acc += up[i] * f[i + 1]
            out[i] = acc


@njit(cache=True)
def _nb_phase_rotate(offsets, alpha_sq, two_dt, f):
    for e in range(len(offsets) - 1):
        c = two_dt * alpha_sq[e]
        for i in range(offsets[e], offsets[e + 1]):
            z = f[i]
            mag2 = z.real * z.real + z.imag * z.imag
            ph = c * mag2
            f[i] = z * complex(np.cos(ph), np.sin(ph))


# ---------------------------------------------------------------------------
# backend-dispatching interface
# ---------------------------------------------------------------------------

class TridiagFactor:
    """Prefactored per-edge tridiagonal systems over the packed layout."""

    def __init__(self, offsets: np.ndarray, dl, d, du):
        self.offsets = offsets
        self.dl = np.ascontiguousarray(dl, dtype=np.complex128)
        self.d = np.ascontiguousarray(d, dtype=np.complex128)
        self.du = np.ascontiguousarray(du, dtype=np.complex128)
        self._numba = use_numba()
        if self._numba:
            n = len(self.d)
            self.w = np.zeros(n, dtype=np.complex128)
            self.bt = np.zeros(n, dtype=np.complex128)
            _nb_thomas_factor(offsets, self.dl, self.d, self.du, self.w, self.bt)
        else:
            self._lu = []
            for e in range(len(offsets) - 1):
                s, t = offsets[e], offsets[e + 1]
                dl_, d_, du_, du2, ipiv, info = _lapack.zgttrf(
                    self.dl[s + 1:t], self.d[s:t], self.du[s:t - 1])
                if info != 0:
                    raise RuntimeError(f"zgttrf failed on edge {e}: info={info}")
                self._lu.append((dl_, d_, du_, du2, ipiv))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        out = np.empty_like(rhs)
        if self._numba:
            _nb_thomas_solve(self.offsets, self.w, self.bt, self.du, rhs, out)
            return out
        for e in range(len(self.offsets) - 1):
            s, t = self.offsets[e], self.offsets[e + 1]
            x, info = _lapack.zgttrs(*self._lu[e], rhs[s:t])
            if info != 0:
                raise RuntimeError(f"zgttrs failed on edge {e}: info={info}")
            out[s:t] = x
        return out


def tri_apply(offsets, lo, di, up, f) -> np.ndarray:
    """out = T f for the packed tridiagonal T (boundary coefficients zero)."""
    out = np.empty_like(f)
    if use_numba():
        _nb_tri_apply(offsets, lo, di, up, f, out)
        return out
    out[:] = di * f
    out[1:] += lo[1:] * f[:-1]
    out[:-1] += up[:-1] * f[1:]
    return out


def phase_rotate(offsets, alpha_sq, two_dt, f) -> None:
    """In-place f *= exp(i * two_dt * alpha_j^2 * |f|^2) per edge."""
    if use_numba():
        _nb_phase_rotate(offsets, alpha_sq, two_dt, f)
        return
    for e in range(len(offsets) - 1):
        s, t = offsets[e], offsets[e + 1]
        seg = f[s:t]
        seg *= np.exp((1j * two_dt * alpha_sq[e]) * np.abs(seg) ** 2)
