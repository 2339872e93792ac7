"""
Memory-time convergence search.

The reference run uses the longest memory time; candidates are then
scanned backwards on a coarse stride and the crossing is refined by
bisection on the grid. A candidate passes when every element at every
time step stays within the convergence parameter of the reference.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .models import GqmeResult, GqmeType, InhomSeries, KernelSeries
from .propagator import GqmeIntegrationError, propagate_gqme

logger = logging.getLogger(__name__)

# Converged memory times (1/Gamma) of the shipped model configs, keyed by model number (60 modes, t_mem_max = 15).
REFERENCE_MEMORY_TIMES: Dict[int, Dict[GqmeType, float]] = {
    1: {
        GqmeType.FULL: 5.5034,
        GqmeType.POPULATIONS_ONLY: 14.7534,
        GqmeType.DONOR_ONLY: 14.7534,
        GqmeType.ACCEPTOR_ONLY: 14.5034,
    },
    2: {
        GqmeType.FULL: 1.65348,
        GqmeType.POPULATIONS_ONLY: 14.4035,
        GqmeType.DONOR_ONLY: 14.9035,
        GqmeType.ACCEPTOR_ONLY: 14.4035,
    },
    3: {
        GqmeType.FULL: 9.5034,
        GqmeType.POPULATIONS_ONLY: 13.7534,
        GqmeType.DONOR_ONLY: 13.5034,
        GqmeType.ACCEPTOR_ONLY: 14.0034,
    },
    4: {
        GqmeType.FULL: 14.6535,
        GqmeType.POPULATIONS_ONLY: 5.65348,
        GqmeType.DONOR_ONLY: 14.9035,
        GqmeType.ACCEPTOR_ONLY: 11.9035,
    },
    6: {
        GqmeType.FULL: 9.65348,
        GqmeType.POPULATIONS_ONLY: 10.4035,
        GqmeType.DONOR_ONLY: 13.9035,
        GqmeType.ACCEPTOR_ONLY: 13.6535,
    },
}


class MemoryTimeSearchError(RuntimeError):
    """Raised when the memory-time search cannot establish its reference."""
    pass


@dataclass(frozen=True)
class MemoryTimeCandidate:
    """One evaluated memory time with its deviation from the reference."""
    memory_time: float
    deviation: float
    converged: bool


@dataclass
class MemoryTimeResult:
    """Outcome of a memory-time search."""
    memory_time: float
    result: GqmeResult
    reference: GqmeResult
    convergence_param: float
    candidates: List[MemoryTimeCandidate] = field(default_factory=list)


def max_deviation(result: GqmeResult, reference: GqmeResult) -> float:
    """Largest element-wise deviation over the common time grid."""
    n_points = min(result.n_points, reference.n_points)
    return float(np.max(np.abs(result.sigma[:n_points] - reference.sigma[:n_points])))


def memory_time_search(
    kernel: KernelSeries,
    liouvillian=None,
    inhom: Optional[InhomSeries] = None,
    convergence_param: float = 5e-4,
    t_mem_max: Optional[float] = None,
    t_final: Optional[float] = None,
    stride: float = 0.25,
    jobs: int = 1,
) -> MemoryTimeResult:
    """Shortest grid-aligned memory time reproducing the t_mem_max dynamics.

    Args:
        kernel: Memory kernel covering [0, t_mem_max]
        liouvillian: Projected Liouvillian (required for Full)
        inhom: Inhomogeneous term when the GQME type needs one
        convergence_param: Allowed deviation per element and time step
        t_mem_max: Longest memory time (default: end of the kernel grid)
        t_final: Propagation end time (default: end of the kernel grid)
        stride: Coarse backward stride in time units, rounded to grid steps
        jobs: Candidates evaluated concurrently

    Raises:
        MemoryTimeSearchError: If t_mem_max exceeds the kernel or the reference run fails
    """
    dt = kernel.dt
    n_grid = kernel.n_points - 1
    n_max = n_grid if t_mem_max is None else int(round(t_mem_max / dt))
    if n_max > n_grid:
        raise MemoryTimeSearchError(
            f"t_mem_max {t_mem_max} exceeds the kernel grid end {n_grid * dt:.6g}"
        )

    def run(n_mem: int) -> GqmeResult:
        return propagate_gqme(
            kernel, liouvillian=liouvillian, inhom=inhom, t_final=t_final, memory_time=n_mem * dt
        )

    try:
        reference = run(n_max)
    except GqmeIntegrationError as e:
        raise MemoryTimeSearchError(f"Reference run at t_mem = {n_max * dt:.6g} failed: {e}")

    results: Dict[int, GqmeResult] = {n_max: reference}
    evaluated: Dict[int, MemoryTimeCandidate] = {
        n_max: MemoryTimeCandidate(memory_time=n_max * dt, deviation=0.0, converged=True)
    }

    def evaluate(n_mem: int) -> MemoryTimeCandidate:
        try:
            result = run(n_mem)
            deviation = max_deviation(result, reference)
        except GqmeIntegrationError as e:
            logger.debug("Candidate t_mem = %.6g diverged: %s", n_mem * dt, e)
            result, deviation = None, float("inf")
        if result is not None:
            results[n_mem] = result
        return MemoryTimeCandidate(
            memory_time=n_mem * dt,
            deviation=deviation,
            converged=deviation < convergence_param,
        )

    def evaluate_all(points: List[int]) -> None:
        if jobs > 1 and len(points) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(evaluate, points))
        else:
            outcomes = [evaluate(n) for n in points]
        for n_mem, candidate in zip(points, outcomes):
            evaluated[n_mem] = candidate
            logger.info(
                "Memory time %.6g: deviation %.3e (%s)",
                candidate.memory_time, candidate.deviation, "pass" if candidate.converged else "fail",
            )

    # Coarse backward scan.
    step = max(1, int(round(stride / dt)))
    coarse = list(range(n_max - step, 0, -step)) + [0]
    passing, failing = n_max, None
    batch = max(1, jobs)
    for start in range(0, len(coarse), batch):
        points = [n for n in coarse[start:start + batch] if n not in evaluated]
        evaluate_all(points)
        for n_mem in coarse[start:start + batch]:
            if evaluated[n_mem].converged:
                passing = n_mem
            else:
                failing = n_mem
                break
        if failing is not None:
            break

    # Bisection between the last failing and the first passing grid point.
    if failing is not None:
        while passing - failing > 1:
            middle = (passing + failing) // 2
            evaluate_all([middle])
            if evaluated[middle].converged:
                passing = middle
            else:
                failing = middle

    if passing not in results:
        results[passing] = run(passing)
    candidates = sorted(evaluated.values(), key=lambda c: c.memory_time, reverse=True)
    logger.info(
        "%s memory time converged at %.6g after %d candidates",
        kernel.gqme_type.value, passing * dt, len(candidates),
    )
    return MemoryTimeResult(
        memory_time=passing * dt,
        result=results[passing],
        reference=reference,
        convergence_param=convergence_param,
        candidates=candidates,
    )
