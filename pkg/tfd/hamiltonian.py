"""
The Bogoliubov-rotated double-space Hamiltonian and the thermal initial state.

H_theta = eps sz + G sx + sum_k w_k (a_k^+ a_k - b_k^+ b_k)
          - sz g_k [(a_k + a_k^+) cosh th_k + (b_k + b_k^+) sinh th_k],
with g_k = c_k / sqrt(2 w_k) and b_k the tilde mode. Cores are ordered
electronic, then (physical, tilde) per mode.
"""

import logging
from typing import List

import numpy as np
import scipy.sparse as sp

from spin_boson.liouvillian import IDENTITY_2, PAULI_Z, electronic_hamiltonian
from spin_boson.models import SpinBosonModel
from tensor_train import TensorTrainOperator, TensorTrainVector, tt_from_product

from .models import ElectronicState

logger = logging.getLogger(__name__)

# MPO automaton states: nothing placed yet, sigma_z carried, term complete.
_IDLE, _CARRY, _DONE = 0, 1, 2


def annihilation(n_fock: int) -> np.ndarray:
    """Truncated harmonic annihilation operator."""
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1).astype(complex)


def number_operator(n_fock: int) -> np.ndarray:
    return np.diag(np.arange(n_fock, dtype=float)).astype(complex)


def position_like(n_fock: int) -> np.ndarray:
    """a + a^+."""
    a = annihilation(n_fock)
    return a + a.conj().T


def mode_terms(model: SpinBosonModel):
    """Per-core (on-site term, sigma_z coupling) pairs for the nuclear cores."""
    bath = model.bath
    n = model.params.n_fock
    num = number_operator(n)
    x = position_like(n)
    terms = []
    for omega, g, theta in zip(bath.omegas, bath.displacements, bath.thetas):
        terms.append((omega * num, -g * np.cosh(theta) * x))
        terms.append((-omega * num, -g * np.sinh(theta) * x))
    return terms


def build_theta_hamiltonian(model: SpinBosonModel) -> TensorTrainOperator:
    """TT operator of H_theta with bond rank 3."""
    params = model.params
    h_e = electronic_hamiltonian(params.epsilon, params.gamma_c)

    first = np.zeros((1, 2, 2, 3), dtype=complex)
    first[0, :, :, _IDLE] = IDENTITY_2
    first[0, :, :, _CARRY] = PAULI_Z
    first[0, :, :, _DONE] = h_e
    cores: List[np.ndarray] = [first]

    n = params.n_fock
    eye = np.eye(n, dtype=complex)
    for onsite, coupling in mode_terms(model):
        core = np.zeros((3, n, n, 3), dtype=complex)
        core[_IDLE, :, :, _IDLE] = eye
        core[_CARRY, :, :, _CARRY] = eye
        core[_DONE, :, :, _DONE] = eye
        core[_IDLE, :, :, _DONE] = onsite
        core[_CARRY, :, :, _DONE] = coupling
        cores.append(core)
    cores[-1] = cores[-1][:, :, :, _DONE:_DONE + 1]

    logger.debug("Built theta Hamiltonian MPO with %d cores", len(cores))
    return TensorTrainOperator(cores=tuple(cores))


def _kron_chain(factors) -> sp.csr_matrix:
    result = sp.csr_matrix(np.ones((1, 1), dtype=complex))
    for factor in factors:
        result = sp.kron(result, sp.csr_matrix(factor), format="csr")
    return result


def theta_hamiltonian_dense(model: SpinBosonModel) -> sp.csr_matrix:
    """Sparse matrix of H_theta in the same core ordering as the TT operator."""
    dims = model.mode_dims
    params = model.params
    identities = [np.eye(n, dtype=complex) for n in dims]

    def embed(site_ops) -> sp.csr_matrix:
        factors = list(identities)
        for site, op in site_ops.items():
            factors[site] = op
        return _kron_chain(factors)

    h = embed({0: electronic_hamiltonian(params.epsilon, params.gamma_c)})
    for offset, (onsite, coupling) in enumerate(mode_terms(model)):
        site = 1 + offset
        h = h + embed({site: onsite}) + embed({0: PAULI_Z, site: coupling})
    return h.tocsr()


def initial_state(model: SpinBosonModel, gamma) -> TensorTrainVector:
    """Rank-1 TT of |gamma> times the double vacuum of every mode."""
    state = ElectronicState.parse(gamma)
    vacuum = np.zeros(model.params.n_fock, dtype=complex)
    vacuum[0] = 1.0
    return tt_from_product([state.vector] + [vacuum] * (2 * model.n_modes))


def initial_dense_vector(model: SpinBosonModel, gamma) -> np.ndarray:
    """Dense counterpart of initial_state."""
    state = ElectronicState.parse(gamma)
    vacuum = np.zeros(model.params.n_fock ** (2 * model.n_modes), dtype=complex)
    vacuum[0] = 1.0
    return np.kron(state.vector, vacuum)
