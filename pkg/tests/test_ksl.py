from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from tensor_train import (
    KslConfig,
    KslIntegrator,
    RankMismatchError,
    TensorTrainOperator,
    inflate_rank,
    ksl_step,
    manifold_ranks,
    propagate,
    tt_expectation,
    tt_from_product,
    tt_norm,
    tt_random,
    tt_scale,
)

DIMS = (2, 3, 3)


def hermitian_chain(dims, seed=5):
    """Random nearest-neighbour Hermitian Hamiltonian as a sum of rank-1 operators."""
    rng = np.random.default_rng(seed)
    total = None
    for site in range(len(dims) - 1):
        a = rng.standard_normal((dims[site], dims[site])) + 1j * rng.standard_normal((dims[site], dims[site]))
        b = rng.standard_normal((dims[site + 1], dims[site + 1])) + 1j * rng.standard_normal((dims[site + 1], dims[site + 1]))
        for left, right in ((a, b), (a.conj().T, b.conj().T)):
            factors = [np.eye(n) for n in dims]
            factors[site], factors[site + 1] = left, right
            dense = TensorTrainOperator.from_product(factors).to_dense()
            total = dense if total is None else total + dense
    return 0.5 * total


def dense_to_operator(matrix, dims):
    """Exact MPO of a dense matrix by successive SVDs (small sizes only)."""
    d = len(dims)
    tensor = matrix.reshape(tuple(dims) + tuple(dims))
    order = [axis for pair in zip(range(d), range(d, 2 * d)) for axis in pair]
    rest = tensor.transpose(order).reshape(1, -1)
    cores = []
    for i, n in enumerate(dims[:-1]):
        rank = rest.shape[0]
        rest = rest.reshape(rank * n * n, -1)
        u, s, vh = np.linalg.svd(rest, full_matrices=False)
        keep = int(np.sum(s > 1e-12 * s[0]))
        cores.append(u[:, :keep].reshape(rank, n, n, keep))
        rest = s[:keep, None] * vh[:keep]
    cores.append(rest.reshape(rest.shape[0], dims[-1], dims[-1], 1))
    return TensorTrainOperator(cores=tuple(cores))


@pytest.fixture
def system():
    h = hermitian_chain(DIMS)
    return h, dense_to_operator(h, DIMS)


@pytest.fixture
def start():
    return tt_from_product([np.array([1.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([1.0, 1.0, 0.0]) / np.sqrt(2)])


def test_dense_to_operator_is_exact(system):
    h, op = system

    np.testing.assert_allclose(op.to_dense(), h, atol=1e-10)


def test_full_rank_manifold_is_exact(system, start):
    h, op = system
    dt, n_steps = 0.05, 10
    cfg = KslConfig(dt=dt, rank=6)

    final = propagate(start, op, cfg, n_steps)

    exact = scipy.linalg.expm(-1j * dt * n_steps * h) @ start.to_vector()
    np.testing.assert_allclose(final.to_vector(), exact, atol=1e-6)


def test_first_order_sweep_is_also_exact_at_full_rank(system, start):
    h, op = system
    cfg = KslConfig(dt=0.02, rank=6, order=1)

    final = propagate(start, op, cfg, 5)

    exact = scipy.linalg.expm(-0.1j * h) @ start.to_vector()
    np.testing.assert_allclose(final.to_vector(), exact, atol=1e-6)


def test_truncated_rank_conserves_norm_and_energy(system, start):
    _, op = system
    cfg = KslConfig(dt=0.05, rank=2)
    psi = inflate_rank(start, cfg.rank)
    energy = tt_expectation(psi, op).real

    for _ in range(20):
        psi = ksl_step(psi, op, cfg)

    assert psi.ranks == manifold_ranks(DIMS, 2)
    assert tt_norm(psi) == pytest.approx(1.0, abs=1e-8)
    assert tt_expectation(psi, op).real == pytest.approx(energy, abs=1e-6)


def test_inflation_keeps_the_state(start):
    inflated = inflate_rank(start, 4)

    assert inflated.ranks == (1, 2, 3, 1)
    np.testing.assert_allclose(inflated.to_vector(), start.to_vector(), atol=1e-10)


def test_observer_sees_every_step(system, start):
    _, op = system
    seen = []

    propagate(start, op, KslConfig(dt=0.01, rank=3), 4, observer=lambda step, psi: seen.append(step))

    assert seen == [1, 2, 3, 4]


def test_zero_steps_return_the_input(system, start):
    _, op = system

    assert propagate(start, op, KslConfig(dt=0.01), 0) is start
    with pytest.raises(ValueError):
        propagate(start, op, KslConfig(dt=0.01), -1)


def test_step_rejects_off_manifold_state(system, start):
    _, op = system
    integrator = KslIntegrator(op, KslConfig(dt=0.01, rank=3))

    with pytest.raises(RankMismatchError):
        integrator.step(start)


@pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"dt": 0.1, "rank": 0}, {"dt": 0.1, "order": 3}, {"dt": 0.1, "krylov_tol": 0.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KslConfig(**kwargs)


def test_zero_hamiltonian_leaves_the_state_unchanged(start):
    zero = TensorTrainOperator.from_product([np.zeros((n, n)) for n in DIMS])

    final = propagate(start, zero, KslConfig(dt=0.1, rank=1), 10)

    np.testing.assert_allclose(final.to_vector(), start.to_vector(), atol=1e-13)


def test_symmetric_splitting_order(system):
    # rank 2 truncates the last bond (full rank there is 3)
    _, op = system
    psi0 = tt_random(DIMS, ranks=(2, 2), rng=np.random.default_rng(11))
    psi0 = tt_scale(psi0, 1.0 / tt_norm(psi0))
    t_final = 0.2

    def run(dt):
        return propagate(psi0, op, KslConfig(dt=dt, rank=2), int(round(t_final / dt))).to_vector()

    reference = run(t_final / 320)
    coarse, fine = (np.linalg.norm(run(dt) - reference) for dt in (0.01, 0.005))

    assert 3.3 < coarse / fine < 4.8


def test_long_run_conserves_norm_and_energy(system):
    _, op = system
    psi = tt_random(DIMS, ranks=(2, 2), rng=np.random.default_rng(4))
    psi = tt_scale(psi, 1.0 / tt_norm(psi))
    energy = tt_expectation(psi, op).real
    norms, energies = [], []

    def record(step, state):
        norms.append(tt_norm(state))
        energies.append(tt_expectation(state, op).real)

    propagate(psi, op, KslConfig(dt=0.01, rank=2), 2000, observer=record)

    assert max(abs(n - 1.0) for n in norms) < 1e-10
    assert max(abs(e - energy) for e in energies) < 1e-6 * max(1.0, abs(energy))


def test_repeated_runs_are_bitwise_identical(system, start):
    _, op = system
    cfg = KslConfig(dt=0.02, rank=2)

    first = propagate(start, op, cfg, 15)
    second = propagate(start, op, cfg, 15)

    for a, b in zip(first.cores, second.cores):
        np.testing.assert_array_equal(a, b)
