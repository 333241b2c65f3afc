"""Cubic NLS on balanced star graphs.

Simulation and analysis suite: shifted standing waves and their drift
instability, linearized spectra of L+/L-, modulation-parameter tracking,
and the reduced finite-dimensional Hamiltonian system.
"""

__version__ = "0.1.0"

from .graph import (GraphFunction, InvalidParameterError, PmlConfig,
                    StarGraph, continuity_residual, ghost_values, make_graph,
                    vertex_value)
from .states import (EigenvalueMergedError, eigenfunction_perturbed_state,
                     line_soliton, phase_modulated_state, shifted_state,
                     surrogate_perturbed_state)
from .functionals import (Diagnostics, action, asymmetry, diagnostics,
                          energy, h1_norm, l2_inner, mass, max_position,
                          momentum, momentum_flux)
from .evolve import (BlowUpError, CheckpointError, Stepper, load_checkpoint,
                     run, save_checkpoint)
from .spectral import (A_STAR, BalanceError, KernelBasis, LinearizedOperator,
                       assemble, eigenpairs, kernel_basis,
                       lambda1_closed_form, lambda1_eigenpair)
from .modulation import ModulationFit, ModulationTrack, decompose, track
from .reduced import (EscapeResult, ReducedCoefficients, ReducedState,
                      compare_pde_ode, cusp_constant, escape_time,
                      hamiltonian, integrate)

__all__ = [name for name in dir() if not name.startswith("_")]
