from __future__ import annotations

import numpy as np
import pytest

from gqme import (
    REFERENCE_MEMORY_TIMES,
    GqmeResult,
    GqmeType,
    KernelSeries,
    MemoryTimeSearchError,
    max_deviation,
    memory_time_search,
)


def step_kernel(cutoff=100, dt=0.01, n_points=301):
    """Donor kernel equal to one up to index cutoff and zero after it."""
    entries = np.zeros((n_points, 1, 1), dtype=complex)
    entries[: cutoff + 1] = 1.0
    return KernelSeries(dt=dt, gqme_type=GqmeType.DONOR_ONLY, entries=entries)


def test_search_finds_kernel_support():
    kernel = step_kernel()

    found = memory_time_search(kernel, convergence_param=1e-10, stride=0.25)

    assert found.memory_time == pytest.approx(1.01)
    assert max_deviation(found.result, found.reference) < 1e-10
    assert found.reference.memory_time == pytest.approx(3.0)


def test_candidates_are_reported_longest_first():
    found = memory_time_search(step_kernel(), convergence_param=1e-10, stride=0.25)

    times = [candidate.memory_time for candidate in found.candidates]
    assert times == sorted(times, reverse=True)
    assert times[0] == pytest.approx(3.0)
    assert found.candidates[0].deviation == 0.0
    assert all(c.converged for c in found.candidates if c.memory_time >= found.memory_time - 1e-12)
    assert not any(c.converged for c in found.candidates if c.memory_time < found.memory_time - 1e-12)


def test_parallel_search_agrees():
    serial = memory_time_search(step_kernel(), convergence_param=1e-10)
    parallel = memory_time_search(step_kernel(), convergence_param=1e-10, jobs=2)

    assert parallel.memory_time == serial.memory_time
    np.testing.assert_array_equal(parallel.result.sigma, serial.result.sigma)


def test_vanishing_kernel_needs_no_memory():
    kernel = KernelSeries(dt=0.01, gqme_type="DonorOnly", entries=np.zeros((51, 1, 1)))

    found = memory_time_search(kernel)

    assert found.memory_time == 0.0
    np.testing.assert_allclose(found.result.element("DD"), np.ones(51))


def test_loose_tolerance_accepts_shorter_memory():
    strict = memory_time_search(step_kernel(), convergence_param=1e-10)
    loose = memory_time_search(step_kernel(), convergence_param=0.5)

    assert loose.memory_time < strict.memory_time


def test_search_beyond_kernel_grid_is_rejected():
    with pytest.raises(MemoryTimeSearchError, match="exceeds"):
        memory_time_search(step_kernel(), t_mem_max=5.0)


def test_failed_reference_run_is_reported():
    kernel = KernelSeries(dt=0.01, gqme_type="AcceptorOnly", entries=np.zeros((11, 1, 1)))

    with pytest.raises(MemoryTimeSearchError, match="Reference run"):
        memory_time_search(kernel)


def test_max_deviation_uses_common_grid():
    a = GqmeResult(dt=0.1, kind="DonorOnly", labels=("DD",), sigma=np.zeros((5, 1)))
    b = GqmeResult(dt=0.1, kind="DonorOnly", labels=("DD",), sigma=np.concatenate([np.zeros((5, 1)), np.ones((3, 1))]))

    assert max_deviation(a, b) == 0.0


def test_reference_memory_times_are_tabulated():
    assert REFERENCE_MEMORY_TIMES[1][GqmeType.FULL] == 5.5034
    assert set(REFERENCE_MEMORY_TIMES) == {1, 2, 3, 4, 6}
    for times in REFERENCE_MEMORY_TIMES.values():
        assert set(times) == set(GqmeType)
        assert all(0.0 < t <= 15.0 for t in times.values())
