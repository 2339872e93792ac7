from __future__ import annotations

import logging

import numpy as np
import pytest

from gqme import (
    GqmeIntegrationError,
    GqmeResult,
    GqmeType,
    InhomSeries,
    KernelSeries,
    combine_single_population,
    default_sigma0,
    differentiate,
    propagate_gqme,
    solve_inhomogeneous,
    solve_kernel,
)
from spin_boson import liouvillian_from_energies
from tfd import direct_sigma_z, two_level_propagator_series


def constant_kernel(gqme_type, value, dt, n_points):
    size = GqmeType.parse(gqme_type).size
    entries = np.zeros((n_points, size, size), dtype=complex)
    entries[:] = value * np.eye(size)
    return KernelSeries(dt=dt, gqme_type=gqme_type, entries=entries)


@pytest.fixture(scope="module")
def rabi_inputs():
    dt, n_steps = 0.002, 750
    series = two_level_propagator_series(1.0, 1.0, dt, n_steps)
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    return series, liouvillian, differentiate(series, liouvillian=liouvillian)


def test_default_initial_vectors():
    np.testing.assert_array_equal(default_sigma0("Full"), [1, 0, 0, 0])
    np.testing.assert_array_equal(default_sigma0("PopulationsOnly"), [1, 0])
    np.testing.assert_array_equal(default_sigma0("AcceptorOnly"), [0])
    np.testing.assert_array_equal(default_sigma0("AcceptorOnly", gamma="A"), [1])


def test_zero_kernel_reduces_to_liouville_dynamics():
    dt = 0.01
    exact = two_level_propagator_series(1.0, 1.0, dt, 100)

    result = propagate_gqme(
        constant_kernel(GqmeType.FULL, 0.0, dt, 101),
        liouvillian=liouvillian_from_energies(1.0, 1.0),
    )

    assert result.labels == ("DD", "DA", "AD", "AA")
    np.testing.assert_allclose(result.sigma, exact.column("DD"), atol=1e-7)
    assert result.trace_deviation() < 1e-10


def test_constant_kernel_gives_harmonic_oscillation():
    # d sigma/dt = -4 int sigma has the solution cos(2t)
    dt = 1e-3
    kernel = constant_kernel(GqmeType.DONOR_ONLY, 4.0, dt, 2001)

    result = propagate_gqme(kernel)

    np.testing.assert_allclose(result.element("DD"), np.cos(2.0 * result.times), atol=1e-4)
    assert result.memory_time == pytest.approx(2.0)


def test_zero_memory_time_freezes_populations():
    kernel = constant_kernel(GqmeType.DONOR_ONLY, 4.0, 0.01, 51)

    result = propagate_gqme(kernel, memory_time=0.0)

    np.testing.assert_allclose(result.element("DD"), np.ones(51))
    assert result.memory_time == 0.0


@pytest.mark.parametrize("gqme_type", list(GqmeType))
def test_exact_kernels_reproduce_isolated_dynamics(rabi_inputs, gqme_type):
    series, liouvillian, pfi = rabi_inputs
    kernel = solve_kernel(pfi, gqme_type, liouvillian=liouvillian)
    inhom = solve_inhomogeneous(pfi, gqme_type) if gqme_type.needs_inhom() else None

    result = propagate_gqme(kernel, liouvillian=liouvillian, inhom=inhom)

    for label in gqme_type.labels:
        np.testing.assert_allclose(
            result.element(label), series.element(label, "DD"), atol=1e-3, err_msg=label
        )


def test_acceptor_start_drives_the_donor_equation(rabi_inputs):
    series, liouvillian, _ = rabi_inputs
    pfi = differentiate(series, liouvillian=liouvillian, gamma="A")
    kernel = solve_kernel(pfi, GqmeType.DONOR_ONLY)

    with pytest.raises(GqmeIntegrationError, match="inhomogeneous term"):
        propagate_gqme(kernel)
    result = propagate_gqme(kernel, inhom=solve_inhomogeneous(pfi, GqmeType.DONOR_ONLY))

    assert kernel.metadata["initial_state"] == "A"
    assert result.metadata["initial_state"] == "A"
    np.testing.assert_allclose(result.element("DD"), series.element("DD", "AA"), atol=1e-3)


def test_single_population_pair_is_combined(rabi_inputs):
    series, _, pfi = rabi_inputs
    donor = propagate_gqme(solve_kernel(pfi, GqmeType.DONOR_ONLY), t_final=1.0)
    acceptor_kernel = solve_kernel(pfi, GqmeType.ACCEPTOR_ONLY)
    acceptor = propagate_gqme(acceptor_kernel, inhom=solve_inhomogeneous(pfi, GqmeType.ACCEPTOR_ONLY))

    combined = combine_single_population(donor, acceptor)

    assert combined.kind == "DonorAcceptor"
    assert combined.labels == ("DD", "AA")
    assert combined.n_points == donor.n_points
    assert combined.trace_deviation() < 1e-3
    exact = series.truncated(501)
    expected = (exact.element("DD", "DD") - exact.element("AA", "DD")).real
    np.testing.assert_allclose(combined.sigma_z, expected, atol=2e-3)


def test_combination_needs_both_single_population_types():
    result = GqmeResult(dt=0.1, kind="DonorOnly", labels=("DD",), sigma=np.ones((3, 1)))
    other = GqmeResult(dt=0.2, kind="AcceptorOnly", labels=("AA",), sigma=np.zeros((3, 1)))

    with pytest.raises(GqmeIntegrationError):
        combine_single_population(result, result)
    with pytest.raises(GqmeIntegrationError, match="Time steps"):
        combine_single_population(result, other)


def test_memory_time_beyond_kernel_grid():
    with pytest.raises(GqmeIntegrationError, match="shorter than memory time"):
        propagate_gqme(constant_kernel("DonorOnly", 1.0, 0.01, 11), memory_time=1.0)


def test_missing_inputs_are_rejected():
    with pytest.raises(GqmeIntegrationError, match="inhomogeneous"):
        propagate_gqme(constant_kernel("AcceptorOnly", 1.0, 0.01, 11))
    with pytest.raises(GqmeIntegrationError, match="Liouvillian"):
        propagate_gqme(constant_kernel("Full", 0.0, 0.01, 11))


def test_initial_vector_must_fit_the_type():
    with pytest.raises(GqmeIntegrationError, match="2 elements"):
        propagate_gqme(constant_kernel("PopulationsOnly", 0.0, 0.01, 11), sigma0=np.ones(1))


def test_kernel_type_must_match():
    with pytest.raises(GqmeIntegrationError, match="cannot drive"):
        propagate_gqme(constant_kernel("DonorOnly", 0.0, 0.01, 11), gqme_type="Full")


def test_short_inhomogeneous_term_is_held(caplog):
    kernel = constant_kernel("AcceptorOnly", 0.0, 0.01, 21)
    inhom = InhomSeries(dt=0.01, gqme_type="AcceptorOnly", entries=np.ones((11, 1)))

    with caplog.at_level(logging.WARNING, logger="gqme.propagator"):
        result = propagate_gqme(kernel, inhom=inhom)

    # d sigma/dt = 1 throughout
    np.testing.assert_allclose(result.element("AA").real, result.times, atol=1e-12)
    assert "holding its last value" in caplog.text


def test_non_finite_solution_is_reported():
    kernel = constant_kernel("DonorOnly", np.nan, 0.01, 11)

    with pytest.raises(GqmeIntegrationError, match="non-finite"):
        propagate_gqme(kernel)


def test_rk4_order_on_liouville_dynamics():
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    errors = []
    for dt, n_steps in ((0.05, 40), (0.025, 80)):
        exact = two_level_propagator_series(1.0, 1.0, dt, n_steps)
        result = propagate_gqme(constant_kernel(GqmeType.FULL, 0.0, dt, n_steps + 1), liouvillian=liouvillian)
        errors.append(np.max(np.abs(result.sigma - exact.column("DD"))))

    assert 14.0 < errors[0] / errors[1] < 18.0


@pytest.mark.parametrize("gqme_type", [GqmeType.FULL, GqmeType.POPULATIONS_ONLY])
def test_coupled_bath_gqme_matches_direct_dynamics(coupled_dense_inputs, gqme_type):
    series, liouvillian, pfi = coupled_dense_inputs
    kernel = solve_kernel(pfi, gqme_type, liouvillian=liouvillian)

    result = propagate_gqme(kernel, liouvillian=liouvillian)

    assert result.n_points == series.n_points
    assert np.max(np.abs(result.sigma_z - direct_sigma_z(series))) < 1e-3


def test_coupled_bath_single_population_pair(coupled_dense_inputs):
    series, _, pfi = coupled_dense_inputs
    donor = propagate_gqme(solve_kernel(pfi, GqmeType.DONOR_ONLY))
    acceptor = propagate_gqme(
        solve_kernel(pfi, GqmeType.ACCEPTOR_ONLY),
        inhom=solve_inhomogeneous(pfi, GqmeType.ACCEPTOR_ONLY),
    )

    combined = combine_single_population(donor, acceptor)

    assert combined.trace_deviation() < 1e-3
    assert np.max(np.abs(combined.sigma_z - direct_sigma_z(series))) < 1e-3
