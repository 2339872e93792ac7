"""
Dense reference backend and closed-form limits.

Dense propagation keeps the whole double-space vector, so it is only
usable for a few modes; it is the truth source for the TT backend.
"""

import logging
import os
import time
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from spin_boson.bath import ModelError
from spin_boson.liouvillian import commutator_superoperator, electronic_hamiltonian
from spin_boson.models import DEFAULT_DENSE_LIMIT, SpinBosonModel

from .hamiltonian import annihilation, initial_dense_vector, number_operator, theta_hamiltonian_dense
from .models import DenseState, ElectronicState, PropagatorSeries

logger = logging.getLogger(__name__)

# Up to this dimension the one-step propagator is formed explicitly.
EXPLICIT_STEP_DIM = 4096
# Entries kept in memory per expm_multiply chunk.
CHUNK_ENTRIES = 20_000_000


class DenseLimitError(ValueError):
    """Raised when a dense state would exceed the configured size limit."""
    pass


@dataclass(frozen=True, eq=False)
class DenseTrajectory:
    """Observables of dense D and A trajectories on the time grid."""
    dt: float
    overlaps: np.ndarray  # (N, 2, 2, 2, 2): [t, l, j, m, k] = <psi_m,k | psi_l,j>
    norms: np.ndarray  # (N, 2)
    energies: np.ndarray  # (N, 2)


def dense_limit_for(model: SpinBosonModel, limit: Optional[int] = None) -> int:
    if limit is not None:
        return int(limit)
    if model.params.dense_limit is not None:
        return int(model.params.dense_limit)
    env_limit = os.getenv("GQME_DENSE_LIMIT")
    return int(env_limit) if env_limit else DEFAULT_DENSE_LIMIT


def check_dense_limit(model: SpinBosonModel, limit: Optional[int] = None) -> int:
    """Return the dense dimension, raising if it exceeds the limit."""
    dimension = model.dense_dimension
    allowed = dense_limit_for(model, limit)
    if dimension > allowed:
        raise DenseLimitError(
            f"Dense state needs {dimension} entries (2 * {model.params.n_fock}^{2 * model.n_modes}), "
            f"limit is {allowed}. Reduce n_modes/n_fock or raise dense_limit."
        )
    return dimension


def evolve_dense(
    hamiltonian: sp.csr_matrix,
    vectors: np.ndarray,
    dt: float,
    n_steps: int,
    record: Callable[[int, np.ndarray], None],
) -> None:
    """Propagate the columns of vectors under exp(-i H t), calling record(step, block).

    record is also called for step 0.
    """
    block = np.asarray(vectors, dtype=complex)
    record(0, block)
    if n_steps == 0:
        return
    dim = hamiltonian.shape[0]
    if dim <= EXPLICIT_STEP_DIM:
        step_matrix = scipy.linalg.expm(-1j * dt * hamiltonian.toarray())
        for step in range(1, n_steps + 1):
            block = step_matrix @ block
            record(step, block)
        return

    generator = (-1j * hamiltonian).tocsr()
    chunk = max(1, min(200, CHUNK_ENTRIES // max(1, block.size)))
    step = 0
    while step < n_steps:
        count = min(chunk, n_steps - step)
        frames = expm_multiply(
            generator, block, start=0.0, stop=count * dt, num=count + 1, endpoint=True
        )
        for offset in range(1, count + 1):
            record(step + offset, frames[offset])
        block = frames[count]
        step += count


def run_dense_trajectories(
    model: SpinBosonModel,
    n_steps: Optional[int] = None,
    limit: Optional[int] = None,
) -> DenseTrajectory:
    """Propagate |D,0> and |A,0> densely and record their electronic overlaps."""
    dimension = check_dense_limit(model, limit)
    n_steps = model.params.n_steps if n_steps is None else n_steps
    hamiltonian = theta_hamiltonian_dense(model)
    start = np.stack(
        [initial_dense_vector(model, ElectronicState.D), initial_dense_vector(model, ElectronicState.A)],
        axis=1,
    )

    overlaps = np.zeros((n_steps + 1, 2, 2, 2, 2), dtype=complex)
    norms = np.zeros((n_steps + 1, 2))
    energies = np.zeros((n_steps + 1, 2))

    def record(step: int, block: np.ndarray) -> None:
        psi = block.T.reshape(2, 2, -1)  # [l, j, nuclear]
        overlaps[step] = np.einsum("ljn,mkn->ljmk", psi, psi.conj())
        norms[step] = np.linalg.norm(block, axis=0)
        energies[step] = np.real(np.einsum("il,il->l", block.conj(), hamiltonian @ block))

    started = time.perf_counter()
    evolve_dense(hamiltonian, start, model.params.dt, n_steps, record)
    logger.info(
        "Dense propagation of %d steps (dimension %d) took %.2fs",
        n_steps, dimension, time.perf_counter() - started,
    )
    return DenseTrajectory(dt=model.params.dt, overlaps=overlaps, norms=norms, energies=energies)


def propagate_dense(
    model: SpinBosonModel,
    n_steps: Optional[int] = None,
    limit: Optional[int] = None,
) -> PropagatorSeries:
    """Full U-series from cross-overlaps of the D and A trajectories.

    U_{jk,lm}(t) = sum_n psi_l[j, n] conj(psi_m[k, n]).
    """
    trajectory = run_dense_trajectories(model, n_steps=n_steps, limit=limit)
    # [t, l, j, m, k] -> [t, j, k, l, m]
    entries = trajectory.overlaps.transpose(0, 2, 4, 1, 3).reshape(-1, 4, 4)
    return PropagatorSeries(
        dt=model.params.dt,
        entries=entries,
        metadata={
            "backend": "dense",
            "model_fingerprint": model.fingerprint(),
            "n_fock": model.params.n_fock,
            "n_modes": model.n_modes,
            "epsilon": model.params.epsilon,
            "gamma": model.params.gamma_c,
            "columns": "DD,DA,AD,AA",
        },
    )


def dense_density_series(model: SpinBosonModel, sigma0: np.ndarray, n_steps: Optional[int] = None) -> np.ndarray:
    """sigma(t) for an arbitrary (possibly non-Hermitian) initial electronic matrix."""
    return propagate_dense(model, n_steps=n_steps).apply(sigma0)


def rabi_series(epsilon: float, gamma_c: float, dt: float, n_steps: int) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form sigma_z(t) of the isolated two-level system started in D.

    Returns:
        (times, sigma_z)
    """
    times = dt * np.arange(n_steps + 1)
    omega_sq = epsilon**2 + gamma_c**2
    if omega_sq == 0.0:
        return times, np.ones_like(times)
    omega = np.sqrt(omega_sq)
    return times, (epsilon**2 + gamma_c**2 * np.cos(2.0 * omega * times)) / omega_sq


def two_level_propagator_series(epsilon: float, gamma_c: float, dt: float, n_steps: int) -> PropagatorSeries:
    """Exact U(t) = exp(-i L t) of the isolated two-level system."""
    liouvillian = commutator_superoperator(electronic_hamiltonian(epsilon, gamma_c))
    evals, evecs = np.linalg.eigh(liouvillian)
    times = dt * np.arange(n_steps + 1)
    phases = np.exp(-1j * np.outer(times, evals))  # (N, 4)
    entries = np.einsum("ia,ta,ja->tij", evecs, phases, evecs.conj())
    return PropagatorSeries(
        dt=dt,
        entries=entries,
        metadata={"backend": "analytic", "epsilon": epsilon, "gamma": gamma_c},
    )


def dephasing_reference(
    model: SpinBosonModel,
    sigma0: Optional[np.ndarray] = None,
    n_steps: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Pure-dephasing (Gamma = 0) electronic dynamics by dense propagation.

    Args:
        model: Model with gamma_c == 0
        sigma0: Initial electronic matrix (default |+><+|)

    Returns:
        (times, sigma) with sigma of shape (N, 2, 2)
    """
    if model.params.gamma_c != 0.0:
        raise ModelError(f"Dephasing reference needs gamma = 0, got {model.params.gamma_c}")
    if sigma0 is None:
        plus = ElectronicState.PLUS.vector
        sigma0 = np.outer(plus, plus.conj())
    series = propagate_dense(model, n_steps=n_steps)
    return series.times, series.apply(sigma0)


def dephasing_coherence(model: SpinBosonModel, times) -> np.ndarray:
    """Closed-form U_{DA,DA}(t) at Gamma = 0 for the discretized bath.

    exp(-2i eps t - sum_k (2 c_k^2 / w_k^3) coth(beta w_k / 2) (1 - cos w_k t));
    the symmetric +/- coupling leaves no polaron phase.
    """
    if model.params.gamma_c != 0.0:
        raise ModelError(f"Dephasing coherence needs gamma = 0, got {model.params.gamma_c}")
    times = np.asarray(times, dtype=float)
    bath = model.bath
    weights = 2.0 * bath.couplings**2 / bath.omegas**3 / np.tanh(0.5 * model.params.beta * bath.omegas)
    decay = (1.0 - np.cos(np.outer(times, bath.omegas))) @ weights
    return np.exp(-2j * model.params.epsilon * times - decay)


def thermal_vacuum_dense(omega: float, beta: float, n_fock: int) -> DenseState:
    """exp(-iG)|0, 0~> for one mode, with G = -i theta (a a~ - a^+ a~^+)."""
    theta = np.arctanh(np.exp(-0.5 * beta * omega))
    a = annihilation(n_fock)
    pair = np.kron(a, a)
    generator = theta * (pair.conj().T - pair)  # -iG
    vacuum = np.zeros(n_fock * n_fock, dtype=complex)
    vacuum[0] = 1.0
    return DenseState(vector=scipy.linalg.expm(generator) @ vacuum, dims=(n_fock, n_fock))


def nuclear_hamiltonians_dense(model: SpinBosonModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Donor, acceptor and free-bath nuclear Hamiltonians (physical modes only).

    H_D/A = +/- eps + sum_k [w_k (N_k + 1/2) -/+ c_k (a_k + a_k^+) / sqrt(2 w_k)]
    """
    n = model.params.n_fock
    eye = np.eye(n, dtype=complex)
    dims = [n] * model.n_modes

    def embed(site: int, op: np.ndarray) -> np.ndarray:
        result = np.ones((1, 1), dtype=complex)
        for i in range(len(dims)):
            result = np.kron(result, op if i == site else eye)
        return result

    size = n ** model.n_modes
    bath = np.zeros((size, size), dtype=complex)
    coupling = np.zeros((size, size), dtype=complex)
    a = annihilation(n)
    for k, (omega, g) in enumerate(zip(model.bath.omegas, model.bath.displacements)):
        bath += embed(k, omega * (number_operator(n) + 0.5 * eye))
        coupling += embed(k, g * (a + a.conj().T))
    shift = model.params.epsilon * np.eye(size)
    return bath + shift - coupling, bath - shift + coupling, bath

