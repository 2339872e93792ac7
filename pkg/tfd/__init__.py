"""
Thermo-field dynamics: TT and dense propagation of the electronic propagator U(t).
"""

from .models import (
    ElectronicState,
    PropagatorSeries,
    DenseState,
    InvalidElectronicStateError,
)
from .hamiltonian import (
    build_theta_hamiltonian,
    theta_hamiltonian_dense,
    initial_state,
    initial_dense_vector,
)
from .dense import (
    DenseLimitError,
    DenseTrajectory,
    run_dense_trajectories,
    propagate_dense,
    dense_density_series,
    rabi_series,
    two_level_propagator_series,
    dephasing_coherence,
    dephasing_reference,
    thermal_vacuum_dense,
    nuclear_hamiltonians_dense,
)
from .propagator import (
    PropagationError,
    ALL_STATES,
    electronic_density,
    run_tt_trajectories,
    required_initial_states,
    union_of_states,
    series_from_densities,
    compute_U_series,
    density_from_series,
    direct_sigma_z,
)

__all__ = [
    # Models
    "ElectronicState",
    "PropagatorSeries",
    "DenseState",
    "InvalidElectronicStateError",
    # Hamiltonian
    "build_theta_hamiltonian",
    "theta_hamiltonian_dense",
    "initial_state",
    "initial_dense_vector",
    # Dense oracle
    "DenseLimitError",
    "DenseTrajectory",
    "run_dense_trajectories",
    "propagate_dense",
    "dense_density_series",
    "rabi_series",
    "two_level_propagator_series",
    "dephasing_coherence",
    "dephasing_reference",
    "thermal_vacuum_dense",
    "nuclear_hamiltonians_dense",
    # TT propagation
    "PropagationError",
    "ALL_STATES",
    "electronic_density",
    "run_tt_trajectories",
    "required_initial_states",
    "union_of_states",
    "series_from_densities",
    "compute_U_series",
    "density_from_series",
    "direct_sigma_z",
]
