from __future__ import annotations

import numpy as np
import pytest

from conftest import make_params
from spin_boson import build_model
from tfd import (
    ElectronicState,
    InvalidElectronicStateError,
    build_theta_hamiltonian,
    initial_dense_vector,
    initial_state,
    theta_hamiltonian_dense,
    thermal_vacuum_dense,
)
from tfd.hamiltonian import annihilation, number_operator, position_like


@pytest.fixture
def small_model():
    return build_model(make_params(n_modes=2, n_fock=3))


def test_mpo_matches_sparse_hamiltonian(small_model):
    mpo = build_theta_hamiltonian(small_model)

    np.testing.assert_allclose(mpo.to_dense(), theta_hamiltonian_dense(small_model).toarray(), atol=1e-12)


def test_mpo_has_bond_rank_three(small_model):
    mpo = build_theta_hamiltonian(small_model)

    assert mpo.mode_dims == small_model.mode_dims
    assert mpo.ranks == (1, 3, 3, 3, 3, 1)


def test_hamiltonian_is_hermitian(small_model):
    h = theta_hamiltonian_dense(small_model).toarray()

    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)


def test_uncoupled_bath_separates():
    model = build_model(make_params(xi=0.0, n_modes=1, n_fock=3))
    omega = model.bath.omegas[0]
    electronic = np.array([[1.0, 1.0], [1.0, -1.0]])
    nuclear = omega * (np.kron(number_operator(3), np.eye(3)) - np.kron(np.eye(3), number_operator(3)))

    expected = np.kron(electronic, np.eye(9)) + np.kron(np.eye(2), nuclear)

    np.testing.assert_allclose(theta_hamiltonian_dense(model).toarray(), expected, atol=1e-12)


def test_ladder_operators():
    a = annihilation(4)

    np.testing.assert_allclose(a.conj().T @ a, number_operator(4))
    np.testing.assert_allclose(position_like(4), a + a.conj().T)


def test_initial_state_is_double_vacuum(small_model):
    psi = initial_state(small_model, "A")

    assert psi.ranks == (1, 1, 1, 1, 1, 1)
    np.testing.assert_allclose(psi.to_vector(), initial_dense_vector(small_model, ElectronicState.A))
    assert psi.element((1, 0, 0, 0, 0)) == 1.0


def test_superposition_states_are_normalized():
    for state in ElectronicState:
        assert np.linalg.norm(state.vector) == pytest.approx(1.0)
    assert ElectronicState.parse("+") == ElectronicState.PLUS
    with pytest.raises(InvalidElectronicStateError):
        ElectronicState.parse("Q")


def test_thermal_vacuum_gives_boltzmann_populations():
    omega, beta, n_fock = 1.0, 2.0, 16
    state = thermal_vacuum_dense(omega, beta, n_fock)

    amplitudes = state.vector.reshape(n_fock, n_fock)
    populations = np.sum(np.abs(amplitudes) ** 2, axis=1)

    x = np.exp(-beta * omega)
    np.testing.assert_allclose(populations[:6], (1 - x) * x ** np.arange(6), atol=1e-6)
    assert np.linalg.norm(state.vector) == pytest.approx(1.0)
