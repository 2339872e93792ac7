from __future__ import annotations

import numpy as np
import pytest

from conftest import make_params
from spin_boson import (
    LIOUVILLE_LABELS,
    commutator_superoperator,
    electronic_hamiltonian,
    liouville_index,
    projected_liouvillian,
    unvectorize,
    vectorize,
)


def test_liouville_ordering():
    assert LIOUVILLE_LABELS == ("DD", "DA", "AD", "AA")
    assert liouville_index("da") == 1
    with pytest.raises(ValueError):
        liouville_index("XY")


def test_commutator_acts_on_row_major_vectors():
    rng = np.random.default_rng(3)
    h = electronic_hamiltonian(0.7, 1.3)
    sigma = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))

    result = unvectorize(commutator_superoperator(h) @ vectorize(sigma))

    np.testing.assert_allclose(result, h @ sigma - sigma @ h, atol=1e-14)


def test_projected_liouvillian_is_hermitian_and_trace_preserving():
    liouvillian = projected_liouvillian(make_params()).matrix

    np.testing.assert_allclose(liouvillian, liouvillian.conj().T, atol=1e-14)
    np.testing.assert_allclose(liouvillian[0] + liouvillian[3], np.zeros(4), atol=1e-14)
    np.testing.assert_allclose(liouvillian @ vectorize(np.eye(2)), np.zeros(4), atol=1e-14)


def test_population_block_vanishes():
    liouvillian = projected_liouvillian(make_params())

    np.testing.assert_array_equal(liouvillian.restrict((0, 3)), np.zeros((2, 2)))


def test_projected_liouvillian_table():
    eps, gamma_c = 0.5, 1.0
    expected = np.array(
        [
            [0.0, -gamma_c, gamma_c, 0.0],
            [-gamma_c, 2 * eps, 0.0, gamma_c],
            [gamma_c, 0.0, -2 * eps, -gamma_c],
            [0.0, gamma_c, -gamma_c, 0.0],
        ]
    )

    matrix = projected_liouvillian(make_params(epsilon=eps, gamma=gamma_c)).matrix

    np.testing.assert_allclose(matrix, expected, atol=1e-15)
    assert matrix[liouville_index("DD"), liouville_index("DA")] == pytest.approx(-1.0)
    assert matrix[liouville_index("DD"), liouville_index("AD")] == pytest.approx(1.0)


def test_uncoupled_liouvillian_is_diagonal():
    matrix = projected_liouvillian(make_params(epsilon=0.8, gamma=0.0)).matrix

    np.testing.assert_allclose(matrix, np.diag([0.0, 1.6, -1.6, 0.0]), atol=1e-15)


@pytest.mark.parametrize("eps", [0.0, 0.3, 1.0])
def test_population_swap_reverses_the_bias(eps):
    swap = [3, 1, 2, 0]
    forward = projected_liouvillian(make_params(epsilon=eps)).matrix
    reversed_bias = projected_liouvillian(make_params(epsilon=-eps)).matrix

    np.testing.assert_allclose(reversed_bias[np.ix_(swap, swap)], -forward, atol=1e-15)
