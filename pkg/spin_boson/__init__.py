"""
Spin-boson model construction: parameters, Ohmic bath, projected Liouvillian.
"""

from .models import (
    Backend,
    SpinBosonParams,
    DiscretizedBath,
    ElectronicLiouvillian,
    SpinBosonModel,
    DEFAULT_DENSE_LIMIT,
)
from .bath import (
    ModelError,
    BathDiscretizationError,
    spectral_density,
    bogoliubov_angles,
    discretize_bath,
    build_model,
    reorganization_energy,
    continuum_reorganization_energy,
    reconstruct_spectral_density,
)
from .liouvillian import (
    LIOUVILLE_LABELS,
    ELECTRONIC_LABELS,
    PAULI_X,
    PAULI_Z,
    liouville_index,
    electronic_hamiltonian,
    commutator_superoperator,
    liouvillian_from_energies,
    projected_liouvillian,
    vectorize,
    unvectorize,
)
from .config import ConfigError, load_params, params_from_mapping, parse_override

__all__ = [
    # Models
    "Backend",
    "SpinBosonParams",
    "DiscretizedBath",
    "ElectronicLiouvillian",
    "SpinBosonModel",
    "DEFAULT_DENSE_LIMIT",
    # Bath
    "ModelError",
    "BathDiscretizationError",
    "spectral_density",
    "bogoliubov_angles",
    "discretize_bath",
    "build_model",
    "reorganization_energy",
    "continuum_reorganization_energy",
    "reconstruct_spectral_density",
    # Liouvillian
    "LIOUVILLE_LABELS",
    "ELECTRONIC_LABELS",
    "PAULI_X",
    "PAULI_Z",
    "liouville_index",
    "electronic_hamiltonian",
    "commutator_superoperator",
    "liouvillian_from_energies",
    "projected_liouvillian",
    "vectorize",
    "unvectorize",
    # Config
    "ConfigError",
    "load_params",
    "params_from_mapping",
    "parse_override",
]
