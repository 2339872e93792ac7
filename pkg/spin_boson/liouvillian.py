"""
Electronic-space operators and the projected Liouvillian.

Liouville-space vectors are row-major vectorizations of 2x2 electronic
matrices, giving the index order (DD, DA, AD, AA) with D = sigma_z = +1.
"""

from typing import Tuple

import numpy as np

from .models import ElectronicLiouvillian, SpinBosonParams

LIOUVILLE_LABELS: Tuple[str, ...] = ("DD", "DA", "AD", "AA")
ELECTRONIC_LABELS: Tuple[str, ...] = ("D", "A")

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def liouville_index(label: str) -> int:
    """Position of a two-letter label such as 'DA' in Liouville ordering."""
    try:
        return LIOUVILLE_LABELS.index(label.upper())
    except ValueError:
        raise ValueError(f"Unknown Liouville label '{label}', expected one of {LIOUVILLE_LABELS}")


def electronic_hamiltonian(epsilon: float, gamma_c: float) -> np.ndarray:
    """H_e = epsilon sigma_z + Gamma sigma_x."""
    return epsilon * PAULI_Z + gamma_c * PAULI_X


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """Superoperator of [h, .] acting on row-major vectorized matrices."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0], dtype=complex)
    return np.kron(h, eye) - np.kron(eye, h.T)


def liouvillian_from_energies(epsilon: float, gamma_c: float) -> ElectronicLiouvillian:
    """Projected Liouvillian for a Condon spin-boson model with given bias and coupling."""
    return ElectronicLiouvillian(
        matrix=commutator_superoperator(electronic_hamiltonian(epsilon, gamma_c))
    )


def projected_liouvillian(params: SpinBosonParams) -> ElectronicLiouvillian:
    """<L> averaged over the initial nuclear state.

    The bath-linear term averages to zero over the free-bath thermal
    state, so only the electronic Hamiltonian survives.
    """
    return liouvillian_from_energies(params.epsilon, params.gamma_c)


def vectorize(matrix: np.ndarray) -> np.ndarray:
    """2x2 electronic matrix -> Liouville vector."""
    return np.asarray(matrix, dtype=complex).reshape(4)


def unvectorize(vector: np.ndarray) -> np.ndarray:
    """Liouville vector(s) -> 2x2 electronic matrix (trailing axis of length 4)."""
    vector = np.asarray(vector, dtype=complex)
    return vector.reshape(vector.shape[:-1] + (2, 2))
