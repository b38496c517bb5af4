"""Two qubits in a single-mode cavity beyond the rotating-wave approximation.

Exact diagonalisation of the two-qubit Rabi Hamiltonian at arbitrary qubit
separation, the separation-dependent interaction potential (terms) it
induces, coherent-state dynamics, ground-state correlations and the
displaced-oscillator analytic approximation.
"""

__version__ = "0.1.0"

from .model import ModelParams, build_hamiltonian, symmetry_partner
from .linalg import EigenSystem, EigensolverError, converged_ground, eigendecompose
from .surfaces import Surface, solve_relative_motion, term_values, transition_frequency
from .dynamics import (InitialCondition, initial_amplitudes, population_series,
                       population_spectrum, reduced_density_matrix)
from .observables import StateExpansion, entanglement, observable_surface, photon_number
from .analytic import (analytic_matrix, closed_form_energies, coherent_overlap,
                       compare_analytic_numeric, displacement_params)

__all__ = [
    "ModelParams", "build_hamiltonian", "symmetry_partner",
    "EigenSystem", "EigensolverError", "converged_ground", "eigendecompose",
    "Surface", "solve_relative_motion", "term_values", "transition_frequency",
    "InitialCondition", "initial_amplitudes", "population_series", "population_spectrum",
    "reduced_density_matrix",
    "StateExpansion", "entanglement", "observable_surface", "photon_number",
    "analytic_matrix", "closed_form_energies", "coherent_overlap",
    "compare_analytic_numeric", "displacement_params",
]
