import numpy as np
import pytest
import warnings

from starnls import (EigenvalueMergedError, eigenfunction_perturbed_state,
                     line_soliton, make_graph, mass, momentum,
                     phase_modulated_state, shifted_state, vertex_value)
from starnls.graph import PmlConfig
from starnls.spectral import A_STAR


def test_shifted_state_profile(spectral_graph):
    g = spectral_graph
    phi = shifted_state(g, omega=1.0, a=0.0)
    for j in range(3):
        expect = 1.0 / (g.alpha[j] * np.cosh(g.x[j]))
        np.testing.assert_allclose(phi.edges[j], expect, rtol=1e-14)


def test_sqrt_omega_amplitude(spectral_graph):
    g = spectral_graph
    f = shifted_state(g, omega=4.0, a=0.0)
    for j in range(3):
        v = vertex_value(f, j)
        assert abs(v - 2.0 / g.alpha[j]) < 2.0 / g.alpha[j] * 4.0 * g.dx[j] ** 2


def test_shifted_state_mass(spectral_graph):
    # ||Phi_omega||^2 = 2 sqrt(omega)/alpha_1^2 on a balanced graph
    g = spectral_graph
    for omega, a in [(1.0, 0.0), (1.0, 0.8), (2.5, -0.4)]:
        q = mass(shifted_state(g, omega, a))
        assert abs(q - 2.0 * np.sqrt(omega) / g.alpha[0] ** 2) < 1e-6


def test_mass_independent_of_shift(spectral_graph):
    g = spectral_graph
    qs = [mass(shifted_state(g, 1.0, a)) for a in (-1.0, 0.0, 0.37, 1.4)]
    assert max(qs) - min(qs) < 1e-9


def test_unbalanced_warns():
    g = make_graph(3, [1.0, 1.0, 1.0], 10.0, 0.1)
    with pytest.warns(UserWarning):
        shifted_state(g, 1.0, 0.0)


def test_line_soliton_zero_velocity(spectral_graph):
    g = spectral_graph
    sol = line_soliton(g, v=0.0, x0=-0.6, t=0.0)
    phi = shifted_state(g, omega=1.0, a=0.6)
    assert np.sqrt(mass(sol - phi)) < 1e-13


def test_line_soliton_satisfies_nls(spectral_graph):
    """Finite-difference residual of i phi_t + phi_xx + 2|phi|^2 phi = 0.

    Time derivative by a centered difference of the exact family, space
    derivative by second differences of the sampled field; interior of
    edge 2 only (away from vertex and leaf).
    """
    g = spectral_graph
    v, x0, ddt = 1.0, -10.0, 1e-5
    f0 = line_soliton(g, v, x0, 0.0)
    fp = line_soliton(g, v, x0, ddt)
    fm = line_soliton(g, v, x0, -ddt)
    e = f0.edges[1]
    dt_f = (fp.edges[1] - fm.edges[1]) / (2 * ddt)
    dxx = np.empty_like(e)
    dxx[1:-1] = (e[2:] - 2 * e[1:-1] + e[:-2]) / g.dx[1] ** 2
    res = 1j * dt_f[1:-1] + dxx[1:-1] + 2.0 * np.abs(e[1:-1]) ** 2 * e[1:-1]
    assert np.max(np.abs(res)) < 5.0 * g.dx[1] ** 2


def test_line_soliton_momentum():
    # oracle: quadrature of Im(phi' conj(phi)) = v sqrt(omega)/alpha_1^2
    g = make_graph(3, [1.0, np.sqrt(2), np.sqrt(2)], 40.0, 0.0125,
                   PmlConfig(strength=0.0))
    p = momentum(line_soliton(g, v=1.0, x0=-10.0))
    assert abs(p - 1.0 / g.alpha[0] ** 2) < 1e-4


def test_eigenfunction_perturbed_basics(spectral_graph):
    g = spectral_graph
    base = eigenfunction_perturbed_state(g, -0.55, 0.0)
    phi = shifted_state(g, 1.0, -0.55)
    assert np.sqrt(mass(base - phi)) == 0.0

    f = eigenfunction_perturbed_state(g, -0.55, 0.1)
    assert abs(momentum(f)) < 1e-8
    fc = eigenfunction_perturbed_state(g, -0.55, 0.1j)
    assert abs(momentum(fc)) < 1e-8

    f2 = eigenfunction_perturbed_state(g, 0.55, 0.1)
    assert abs(np.sqrt(mass(f2 - shifted_state(g, 1.0, 0.55))) - 0.1) < 1e-6


def test_eigenfunction_merged_error(spectral_graph):
    with pytest.raises(EigenvalueMergedError):
        eigenfunction_perturbed_state(spectral_graph, A_STAR + 0.01, 0.1)


def test_phase_modulated_zero_mu(spectral_graph):
    g = spectral_graph
    f = phase_modulated_state(g, 0.3, 0.0)
    assert np.sqrt(mass(f - shifted_state(g, 1.0, 0.3))) < 1e-14


def test_phase_modulated_reference_values(experiment_graph):
    g = experiment_graph
    f = phase_modulated_state(g, 0.0, -0.02j)
    assert abs(momentum(f) - (-0.08)) < 0.005
    d = np.sqrt(mass(f - shifted_state(g, 1.0, 0.0)))
    assert 0.035 < d < 0.05


def test_phase_modulated_amplification_warning(spectral_graph):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(UserWarning):
            phase_modulated_state(spectral_graph, 0.0, 0.2)


def test_stationary_equation_residual(spectral_graph):
    """-Lap Phi - 2 alpha^2 Phi^3 + Phi = O(dx^2) in the interior."""
    g = spectral_graph
    phi = shifted_state(g, 1.0, 0.5)
    for j in range(3):
        e = phi.edges[j].real
        lap = (e[2:] - 2 * e[1:-1] + e[:-2]) / g.dx[j] ** 2
        res = -lap - 2 * g.alpha[j] ** 2 * e[1:-1] ** 3 + e[1:-1]
        assert np.max(np.abs(res)) < 4.0 * g.dx[j] ** 2


def test_kirchhoff_residual(spectral_graph):
    # weighted one-sided derivatives at the vertex balance to O(dx^2)
    from starnls.functionals import vertex_derivatives
    g = spectral_graph
    for omega, a in [(1.0, 0.5), (2.0, -0.3)]:
        d = vertex_derivatives(shifted_state(g, omega, a))
        res = abs(d[0] / g.alpha[0] - sum(d[j] / g.alpha[j] for j in (1, 2)))
        assert res < 10.0 * g.dx[0] ** 2


def test_surrogate_perturbed_state(spectral_graph):
    """Beyond a* the surrogate +-c x e^{-x} perturbation stands in for the
    merged eigenfunction: zero on edge 1, unit norm, antisymmetric."""
    from starnls import surrogate_perturbed_state
    g = spectral_graph
    a = 0.8   # > a*, where the internal eigenvalue no longer exists
    f = surrogate_perturbed_state(g, a, 0.1)
    diff = f - shifted_state(g, 1.0, a)
    assert np.max(np.abs(diff.edges[0])) == 0.0
    assert abs(np.sqrt(mass(diff)) - 0.1) < 1e-12
    assert abs(momentum(f)) < 1e-10
