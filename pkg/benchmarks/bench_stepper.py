"""Benchmark the numba kernels against the numpy/LAPACK fallback.

Runs the same split-step integration on both backends and reports wall
time per step plus the diagnostics agreement.  Select the backend under
test with STARNLS_KERNELS; this script flips it in-process instead.

Usage: python benchmarks/bench_stepper.py [n_steps]
"""

import sys
import time

import numpy as np

from starnls import Stepper, make_graph, mass, momentum
from starnls import _kernels
from starnls.graph import PmlConfig
from starnls.states import eigenfunction_perturbed_state


def run_backend(backend: str, n_steps: int):
    _kernels.BACKEND = backend
    g = make_graph(3, [1 / np.sqrt(2), 1.0, 1.0], 40.0, 0.05,
                   PmlConfig(width=5.0, strength=5.0, exponent=3))
    f0 = eigenfunction_perturbed_state(g, 0.55, 0.1)
    stepper = Stepper(g, 0.002)
    # warm-up (JIT compilation on the numba path)
    stepper.strang_step(f0)
    flat = f0.pack().astype(complex)
    t0 = time.perf_counter()
    for _ in range(n_steps):
        flat = stepper._strang(flat)
    elapsed = time.perf_counter() - t0
    from starnls.graph import GraphFunction
    fn = GraphFunction.unpack(g, flat)
    return elapsed, mass(fn), momentum(fn)


def main():
    n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    results = {}
    for backend in ("numpy", "numba") if _kernels.NUMBA_AVAILABLE else ("numpy",):
        elapsed, m, p = run_backend(backend, n_steps)
        results[backend] = (elapsed, m, p)
        print(f"{backend:>6}: {elapsed:8.3f} s total, "
              f"{1e6 * elapsed / n_steps:8.1f} us/step   "
              f"(mass {m:.12f}, momentum {p:.3e})")
    if len(results) == 2:
        (en, mn, pn), (eb, mb, pb) = results["numpy"], results["numba"]
        print(f"speedup numba vs numpy: {en / eb:.2f}x")
        print(f"diagnostics agreement: dmass={abs(mn - mb):.3e} "
              f"dP={abs(pn - pb):.3e}")


if __name__ == "__main__":
    main()
