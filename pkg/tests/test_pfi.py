from __future__ import annotations

import logging

import numpy as np
import pytest

from gqme import GridTooShortError, PfiSeries, differentiate, second_derivative
from spin_boson import liouvillian_from_energies
from tfd import PropagatorSeries, two_level_propagator_series


def analytic_F(series, liouvillian):
    """i dU/dt = <L> U(t) for the isolated two-level system."""
    return np.einsum("ij,tjk->tik", liouvillian.matrix, series.entries)


def test_second_derivative_is_exact_for_cubics():
    t = 0.1 * np.arange(8)
    values = t**3 - 2.0 * t**2 + t

    np.testing.assert_allclose(second_derivative(values, 0.1), 6.0 * t - 4.0, atol=1e-9)


def test_second_derivative_with_three_points():
    values = np.array([0.0, 1.0, 4.0])

    np.testing.assert_allclose(second_derivative(values, 1.0), [2.0, 2.0, 2.0])


def test_short_grid_is_rejected():
    series = two_level_propagator_series(1.0, 1.0, 0.01, 1)

    with pytest.raises(GridTooShortError):
        differentiate(series)
    with pytest.raises(GridTooShortError):
        second_derivative(np.zeros(2), 0.1)


def test_F_matches_closed_form_derivative():
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    series = two_level_propagator_series(1.0, 1.0, 2e-4, 1000)

    pfi = differentiate(series)

    expected = analytic_F(series, liouvillian)
    np.testing.assert_allclose(pfi.F[1:-1], expected[1:-1], atol=1e-6)
    np.testing.assert_allclose(pfi.F, expected, atol=2e-6)


def test_Fdot_matches_closed_form_second_derivative():
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    series = two_level_propagator_series(1.0, 1.0, 5e-4, 400)

    pfi = differentiate(series)

    # i d2U/dt2 = -i <L>^2 U
    expected = -1j * np.einsum("ij,tjk->tik", liouvillian.matrix @ liouvillian.matrix, series.entries)
    np.testing.assert_allclose(pfi.Fdot[1:-1], expected[1:-1], atol=1e-4)


def test_initial_F_is_replaced_by_liouvillian():
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    series = two_level_propagator_series(1.0, 1.0, 1e-3, 50)

    pfi = differentiate(series, liouvillian=liouvillian)

    np.testing.assert_array_equal(pfi.F[0], liouvillian.matrix)
    assert pfi.metadata["f0_stencil_deviation"] < 1e-4


def test_Z_is_the_initial_population_column():
    series = two_level_propagator_series(1.0, 1.0, 1e-3, 50)

    donor = differentiate(series)
    acceptor = differentiate(series, gamma="a")

    np.testing.assert_allclose(donor.Z, -1j * donor.F[:, :, 0])
    np.testing.assert_allclose(acceptor.Z, -1j * acceptor.F[:, :, 3])
    assert acceptor.gamma == "A"


def test_exact_inputs_have_imaginary_population_blocks():
    pfi = differentiate(two_level_propagator_series(1.0, 1.0, 1e-3, 50))

    assert pfi.population_block_realness() < 1e-6


def test_real_population_part_is_reported(caplog):
    series = two_level_propagator_series(1.0, 1.0, 1e-2, 50)
    entries = series.entries.copy()
    entries[:, 0, 0] += 0.1j * series.times
    corrupted = PropagatorSeries(dt=series.dt, entries=entries)

    with caplog.at_level(logging.WARNING, logger="gqme.pfi"):
        pfi = differentiate(corrupted)

    assert pfi.population_block_realness() > 1e-3
    assert "real part" in caplog.text


def test_missing_columns_stay_missing():
    series = two_level_propagator_series(1.0, 1.0, 1e-2, 10)
    entries = series.entries.copy()
    entries[:, :, 1:3] = np.nan

    pfi = differentiate(PropagatorSeries(dt=series.dt, entries=entries), liouvillian=liouvillian_from_energies(1.0, 1.0))

    assert np.all(np.isnan(pfi.F[:, :, 1]))
    assert np.all(np.isfinite(pfi.F[:, :, 0]))


def test_pfi_series_validates_shapes():
    with pytest.raises(ValueError):
        PfiSeries(dt=0.1, F=np.zeros((3, 4, 4)), Fdot=np.zeros((3, 4, 4)), Z=np.zeros((2, 4)))


def test_derivative_order():
    liouvillian = liouvillian_from_energies(1.0, 1.0)
    l2 = liouvillian.matrix @ liouvillian.matrix
    errors_F, errors_Fdot = [], []
    for dt, n_steps in ((0.01, 100), (0.005, 200)):
        series = two_level_propagator_series(1.0, 1.0, dt, n_steps)
        pfi = differentiate(series)
        stride = n_steps // 100
        coarse_times = slice(stride, -stride, stride)
        errors_F.append(np.max(np.abs(pfi.F - analytic_F(series, liouvillian))[coarse_times]))
        expected_Fdot = -1j * np.einsum("ij,tjk->tik", l2, series.entries)
        errors_Fdot.append(np.max(np.abs(pfi.Fdot - expected_Fdot)[coarse_times]))

    assert 3.5 < errors_F[0] / errors_F[1] < 4.5
    assert 3.5 < errors_Fdot[0] / errors_Fdot[1] < 4.5
