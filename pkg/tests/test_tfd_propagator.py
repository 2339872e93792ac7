from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from conftest import make_params
from gqme import MissingPropagationError, assemble_offdiagonal_initial
from spin_boson import build_model, electronic_hamiltonian, vectorize
from tensor_train import max_bond_ranks
from tfd import (
    ALL_STATES,
    ElectronicState,
    compute_U_series,
    density_from_series,
    dephasing_coherence,
    direct_sigma_z,
    electronic_density,
    initial_state,
    propagate_dense,
    rabi_series,
    required_initial_states,
    run_tt_trajectories,
    series_from_densities,
    two_level_propagator_series,
    union_of_states,
)


def pure_state_columns(series, state):
    vector = state.vector
    return series.entries @ vectorize(np.outer(vector, vector.conj()))


def test_reduced_density_of_initial_states(one_mode_model):
    for state in ALL_STATES:
        vector = state.vector
        np.testing.assert_allclose(
            electronic_density(initial_state(one_mode_model, state)),
            np.outer(vector, vector.conj()),
            atol=1e-14,
        )


def test_coherence_columns_from_pure_states():
    series = two_level_propagator_series(0.5, 1.0, 0.02, 50)
    columns = {state: pure_state_columns(series, state) for state in ALL_STATES}

    assembled = assemble_offdiagonal_initial(
        u_dd=columns[ElectronicState.D],
        u_aa=columns[ElectronicState.A],
        u_plus=columns[ElectronicState.PLUS],
        u_y=columns[ElectronicState.Y],
    )

    np.testing.assert_allclose(assembled["DA"], series.column("DA"), atol=1e-12)
    np.testing.assert_allclose(assembled["AD"], series.column("AD"), atol=1e-12)


def test_coherence_assembly_needs_all_states():
    with pytest.raises(MissingPropagationError, match="Y"):
        assemble_offdiagonal_initial(np.zeros((3, 4)), np.zeros((3, 4)), np.zeros((3, 4)), None)


def test_required_states_per_type():
    assert required_initial_states("Full") == ALL_STATES
    assert required_initial_states("DonorOnly") == (ElectronicState.D,)
    assert set(required_initial_states("AcceptorOnly")) == {ElectronicState.D, ElectronicState.A}
    assert union_of_states(["DonorOnly", "PopulationsOnly"]) == (ElectronicState.D, ElectronicState.A)
    with pytest.raises(ValueError):
        required_initial_states("Sideways")


def test_partial_series_marks_absent_columns():
    series = two_level_propagator_series(1.0, 1.0, 0.01, 10)
    densities = {ElectronicState.D: pure_state_columns(series, ElectronicState.D).reshape(-1, 2, 2)}

    partial = series_from_densities(densities, 0.01)

    assert partial.metadata["columns"] == "DD"
    np.testing.assert_allclose(partial.column("DD"), series.column("DD"), atol=1e-14)
    assert np.all(np.isnan(partial.column("DA")))
    assert np.all(np.isnan(partial.column("AA")))


def test_tt_rabi_limit(rabi_model):
    series = compute_U_series(rabi_model, backend="tt", states=[ElectronicState.D])
    _, expected = rabi_series(1.0, 1.0, rabi_model.params.dt, rabi_model.params.n_steps)

    np.testing.assert_allclose(direct_sigma_z(series), expected, atol=1e-8)


def test_tt_matches_dense_for_one_mode(one_mode_model):
    tt = compute_U_series(one_mode_model, backend="tt")
    dense = propagate_dense(one_mode_model)

    np.testing.assert_allclose(tt.entries, dense.entries, atol=1e-6)
    assert tt.metadata["columns"] == "DD,DA,AD,AA"
    assert tt.metadata["rank"] == 16
    assert tt.trace_deviation() < 1e-8


def test_thread_pool_gives_identical_trajectories(one_mode_model):
    serial = run_tt_trajectories(one_mode_model, [ElectronicState.D, ElectronicState.A], n_steps=5)
    threaded = run_tt_trajectories(one_mode_model, [ElectronicState.D, ElectronicState.A], n_steps=5, jobs=2)

    for state in serial:
        np.testing.assert_allclose(serial[state], threaded[state], atol=1e-13)


@pytest.mark.slow
def test_tt_matches_dense_for_two_modes(two_mode_model):
    tt = compute_U_series(two_mode_model, backend="tt", states=[ElectronicState.D, ElectronicState.A])
    dense = propagate_dense(two_mode_model)

    for label in ("DD", "AA"):
        np.testing.assert_allclose(tt.column(label), dense.column(label), atol=1e-6)


def test_density_from_series_evolves_coherent_initial_states():
    dt, n_steps = 0.02, 50
    series = two_level_propagator_series(0.5, 1.0, dt, n_steps)
    y = ElectronicState.Y.vector
    sigma0 = np.outer(y, y.conj())
    h = electronic_hamiltonian(0.5, 1.0)

    sigma = density_from_series(series, sigma0)

    for i in (0, 17, n_steps):
        u = scipy.linalg.expm(-1j * h * i * dt)
        np.testing.assert_allclose(sigma[i], u @ sigma0 @ u.conj().T, atol=1e-12)


def test_direct_sigma_z_reads_partial_series():
    series = two_level_propagator_series(1.0, 1.0, 0.01, 100)
    densities = {ElectronicState.D: pure_state_columns(series, ElectronicState.D).reshape(-1, 2, 2)}
    partial = series_from_densities(densities, 0.01)
    _, expected = rabi_series(1.0, 1.0, 0.01, 100)

    assert np.all(np.isnan(partial.column("DA")))
    np.testing.assert_allclose(direct_sigma_z(partial), expected, atol=1e-10)


@pytest.mark.slow
def test_truncated_rank_tt_matches_dense():
    model = build_model(make_params(n_modes=2, n_fock=10, dt=0.01, t_final=1.0, tt_rank=20))
    assert max(max_bond_ranks(model.mode_dims, 10**6)) > 20

    tt = compute_U_series(model, backend="tt")
    dense = propagate_dense(model)

    assert tt.metadata["rank"] == 20
    np.testing.assert_allclose(tt.entries, dense.entries, atol=1e-6)
    assert tt.trace_deviation() < 1e-8
    assert tt.hermiticity_deviation() < 1e-8


@pytest.mark.slow
def test_tt_pure_dephasing_matches_closed_form_and_dense():
    model = build_model(make_params(gamma=0.0, n_modes=2, n_fock=10, dt=0.01, t_final=5.0, tt_rank=20))

    tt = compute_U_series(model, backend="tt")
    dense = propagate_dense(model)

    np.testing.assert_allclose(tt.element("DD", "DD"), np.ones(tt.n_points), atol=1e-8)
    np.testing.assert_allclose(tt.element("AA", "AA"), np.ones(tt.n_points), atol=1e-8)
    np.testing.assert_allclose(tt.element("DA", "DA"), dense.element("DA", "DA"), atol=1e-5)
    np.testing.assert_allclose(tt.element("DA", "DA"), dephasing_coherence(model, tt.times), atol=1e-5)


def test_tt_tracks_dense_over_a_thousand_steps():
    model = build_model(
        make_params(xi=0.4, omega_c=2.0, omega_max=10.0, n_modes=1, n_fock=4, dt=1e-3, t_final=1.0, tt_rank=16)
    )
    assert model.params.n_steps == 1000

    tt = compute_U_series(model, backend="tt", states=[ElectronicState.D])
    dense = propagate_dense(model)

    np.testing.assert_allclose(tt.column("DD"), dense.column("DD"), atol=1e-6)
