"""
Stage commands: each reads its input artifact, runs one piece of the GQME
machinery and writes the next artifact with a fingerprint chained to its input.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from gqme import (
    GqmeResult,
    GqmeType,
    InhomSeries,
    KernelSeries,
    VolterraScheme,
    differentiate,
    memory_time_search,
    propagate_gqme,
    solve_inhomogeneous,
    solve_kernel,
)
from spin_boson import (
    LIOUVILLE_LABELS,
    ElectronicLiouvillian,
    SpinBosonParams,
    build_model,
    liouvillian_from_energies,
    load_params,
)
from tfd import PropagatorSeries, compute_U_series, rabi_series

from .formats import (
    MalformedSeriesFileError,
    PipelineError,
    inhom_path_for,
    read_inhom_series,
    read_kernel_series,
    read_pfi_series,
    read_propagator_series,
    read_result,
    write_inhom_series,
    write_kernel_series,
    write_pfi_series,
    write_propagator_series,
    write_result,
)
from .models import StageRecord

logger = logging.getLogger(__name__)

REFERENCES = ("rabi",)


class FingerprintMismatchError(PipelineError):
    """Raised when artifacts from different models or grids are mixed."""
    pass


class ComparisonFailedError(PipelineError):
    """Raised when two sigma_z series differ by more than the tolerance."""

    def __init__(self, metric: float, tolerance: float):
        self.metric = metric
        self.tolerance = tolerance
        super().__init__(f"sigma_z differs by {metric:.3e}, tolerance is {tolerance:.3e}")


def header_energies(metadata: Dict[str, Any], source) -> Tuple[float, float]:
    """(epsilon, gamma) recorded in an artifact header."""
    try:
        return float(metadata["epsilon"]), float(metadata["gamma"])
    except (KeyError, TypeError, ValueError):
        raise MalformedSeriesFileError(f"{source}: header lacks numeric 'epsilon' and 'gamma'")


def liouvillian_from_header(metadata: Dict[str, Any], source) -> ElectronicLiouvillian:
    """Rebuild <L> from the energies recorded in an artifact header."""
    return liouvillian_from_energies(*header_energies(metadata, source))


def _same_grid(dt_a: float, dt_b: float) -> bool:
    return abs(dt_a - dt_b) <= 1e-12 * max(abs(dt_a), abs(dt_b))


def _check_same_model(first: Dict[str, Any], second: Dict[str, Any], what: str) -> None:
    a, b = first.get("model_fingerprint"), second.get("model_fingerprint")
    if a is not None and b is not None and a != b:
        raise FingerprintMismatchError(f"{what} come from different models ({a[:12]} vs {b[:12]})")


def direct_result(series: PropagatorSeries) -> GqmeResult:
    """Density matrix U(t) |D><D| read straight off the propagator series."""
    sigma0 = np.zeros((2, 2), dtype=complex)
    sigma0[0, 0] = 1.0
    sigma = series.apply(sigma0).reshape(series.n_points, 4)
    return GqmeResult(
        dt=series.dt,
        kind="Direct",
        labels=LIOUVILLE_LABELS,
        sigma=sigma,
        metadata=dict(series.metadata),
    )


def propagate_to_file(
    params: SpinBosonParams,
    out,
    states: Optional[Iterable] = None,
    jobs: int = 1,
) -> StageRecord:
    """Compute the U-series for validated parameters and write it."""
    started = time.perf_counter()
    model = build_model(params)
    series = compute_U_series(model, backend=params.backend, states=states, jobs=jobs)
    fingerprint = write_propagator_series(out, series)
    logger.info("Wrote U-series with %d points to %s", series.n_points, out)
    return StageRecord(
        stage="propagate",
        output=str(out),
        fingerprint=fingerprint,
        wall_time=time.perf_counter() - started,
        details={
            "backend": params.backend.value,
            "n_points": series.n_points,
            "columns": series.metadata.get("columns"),
            "trace_deviation": series.trace_deviation(),
        },
    )


def cmd_propagate(
    config,
    out,
    backend: Optional[str] = None,
    rank: Optional[int] = None,
    overrides: Optional[Iterable[str]] = None,
    states: Optional[Iterable] = None,
    jobs: int = 1,
) -> StageRecord:
    """Load a configuration and write its U-series.

    Raises:
        ConfigError: If the configuration is invalid
        DenseLimitError: If the dense backend exceeds its size limit
        PropagationError: If a trajectory fails
    """
    params = load_params(config, overrides, extra={"backend": backend, "tt_rank": rank})
    return propagate_to_file(params, out, states=states, jobs=jobs)


def cmd_pfi(u_path, out, gamma: str = "D") -> StageRecord:
    """Differentiate a U-series file into a PFI file."""
    started = time.perf_counter()
    series = read_propagator_series(u_path)
    liouvillian = liouvillian_from_header(series.metadata, u_path)
    pfi = differentiate(series, liouvillian=liouvillian, gamma=gamma)
    fingerprint = write_pfi_series(out, pfi, input_fingerprint=series.metadata["fingerprint"])
    return StageRecord(
        stage="pfi",
        output=str(out),
        fingerprint=fingerprint,
        input_fingerprint=series.metadata["fingerprint"],
        wall_time=time.perf_counter() - started,
        details={
            "population_block_realness": pfi.population_block_realness(),
            "f0_stencil_deviation": pfi.metadata.get("f0_stencil_deviation"),
        },
    )


def cmd_kernel(
    pfi_path,
    gqme_type,
    out,
    tol: float = 1e-10,
    max_iter: int = 50,
    scheme=VolterraScheme.MARCHING,
    tau_max: Optional[float] = None,
) -> List[StageRecord]:
    """Solve the kernel of one GQME type; also writes <out stem>.inhom<suffix> when needed.

    Returns:
        The kernel record, followed by the inhomogeneous-term record if one was written
    """
    started = time.perf_counter()
    gqme_type = GqmeType.parse(gqme_type)
    pfi = read_pfi_series(pfi_path)
    source = pfi.metadata["fingerprint"]
    liouvillian = liouvillian_from_header(pfi.metadata, pfi_path)

    kernel = solve_kernel(
        pfi, gqme_type, liouvillian=liouvillian, tol=tol, max_iter=max_iter, scheme=scheme, tau_max=tau_max
    )
    fingerprint = write_kernel_series(out, kernel, input_fingerprint=source)
    details = {
        "gqme_type": gqme_type.value,
        "iterations_used": kernel.iterations_used,
        "residual": kernel.residual,
        "imag_ratio": kernel.imag_ratio(),
    }
    if gqme_type == GqmeType.FULL:
        details["corner_ratio"] = kernel.corner_ratio()
    records = [
        StageRecord(
            stage="kernel",
            output=str(out),
            fingerprint=fingerprint,
            input_fingerprint=source,
            wall_time=time.perf_counter() - started,
            details=details,
        )
    ]

    if gqme_type.needs_inhom(pfi.gamma):
        started = time.perf_counter()
        inhom = solve_inhomogeneous(pfi, gqme_type, tol=tol, max_iter=max_iter, scheme=scheme, t_max=tau_max)
        inhom_out = inhom_path_for(out)
        inhom_fingerprint = write_inhom_series(inhom_out, inhom, input_fingerprint=source)
        records.append(
            StageRecord(
                stage="inhom",
                output=str(inhom_out),
                fingerprint=inhom_fingerprint,
                input_fingerprint=source,
                wall_time=time.perf_counter() - started,
                details={
                    "gqme_type": gqme_type.value,
                    "iterations_used": inhom.iterations_used,
                    "residual": inhom.residual,
                    "imag_ratio": inhom.imag_ratio(),
                },
            )
        )
    return records


def _load_inhom(kernel: KernelSeries, kernel_path, inhom_path) -> Optional[InhomSeries]:
    if not kernel.gqme_type.needs_inhom(kernel.metadata.get("initial_state", "D")):
        return None
    inhom_path = Path(inhom_path) if inhom_path is not None else inhom_path_for(kernel_path)
    inhom = read_inhom_series(inhom_path)
    if inhom.gqme_type != kernel.gqme_type:
        raise FingerprintMismatchError(
            f"{inhom_path} holds a {inhom.gqme_type.value} term, kernel is {kernel.gqme_type.value}"
        )
    if not _same_grid(inhom.dt, kernel.dt):
        raise FingerprintMismatchError(f"Kernel dt {kernel.dt} and inhomogeneous dt {inhom.dt} differ")
    _check_same_model(kernel.metadata, inhom.metadata, "Kernel and inhomogeneous term")
    if inhom.metadata.get("input_fingerprint") != kernel.metadata.get("input_fingerprint"):
        raise FingerprintMismatchError(f"{inhom_path} was not derived from the kernel's PFI file")
    return inhom


def cmd_gqme(
    kernel_path,
    out,
    inhom_path=None,
    t_final: Optional[float] = None,
    memory_time: Optional[float] = None,
) -> StageRecord:
    """Propagate the GQME of a kernel file and write the result file."""
    started = time.perf_counter()
    kernel = read_kernel_series(kernel_path)
    inhom = _load_inhom(kernel, kernel_path, inhom_path)
    liouvillian = liouvillian_from_header(kernel.metadata, kernel_path)
    result = propagate_gqme(
        kernel, liouvillian=liouvillian, inhom=inhom, t_final=t_final, memory_time=memory_time
    )
    source = kernel.metadata["fingerprint"]
    fingerprint = write_result(out, result, input_fingerprint=source)
    return StageRecord(
        stage="gqme",
        output=str(out),
        fingerprint=fingerprint,
        input_fingerprint=source,
        wall_time=time.perf_counter() - started,
        details={
            "gqme_type": kernel.gqme_type.value,
            "memory_time": result.memory_time,
            "trace_deviation": result.trace_deviation(),
        },
    )


def cmd_memtime(
    kernel_path,
    out,
    inhom_path=None,
    conv_param: float = 5e-4,
    t_mem_max: Optional[float] = None,
    t_final: Optional[float] = None,
    stride: float = 0.25,
    jobs: int = 1,
) -> StageRecord:
    """Search the converged memory time and write the result at that memory time."""
    started = time.perf_counter()
    kernel = read_kernel_series(kernel_path)
    inhom = _load_inhom(kernel, kernel_path, inhom_path)
    liouvillian = liouvillian_from_header(kernel.metadata, kernel_path)
    search = memory_time_search(
        kernel,
        liouvillian=liouvillian,
        inhom=inhom,
        convergence_param=conv_param,
        t_mem_max=t_mem_max,
        t_final=t_final,
        stride=stride,
        jobs=jobs,
    )
    source = kernel.metadata["fingerprint"]
    fingerprint = write_result(out, search.result, input_fingerprint=source)
    return StageRecord(
        stage="memtime",
        output=str(out),
        fingerprint=fingerprint,
        input_fingerprint=source,
        wall_time=time.perf_counter() - started,
        details={
            "gqme_type": kernel.gqme_type.value,
            "memory_time": search.memory_time,
            "convergence_param": conv_param,
            "candidates": [
                {"memory_time": c.memory_time, "deviation": c.deviation, "converged": c.converged}
                for c in search.candidates
            ],
        },
    )


def sigma_z_difference(result: GqmeResult, other: np.ndarray) -> float:
    """Sup-norm difference of sigma_z over the common grid."""
    if result.sigma_z is None:
        raise PipelineError(f"{result.kind} result has no sigma_z to compare")
    n_points = min(result.n_points, len(other))
    return float(np.max(np.abs(result.sigma_z[:n_points] - other[:n_points]), initial=0.0))


def cmd_compare(
    path_a,
    path_b=None,
    reference: Optional[str] = None,
    tolerance: float = 1e-3,
) -> float:
    """Compare sigma_z of a result file with another result file or a closed-form reference.

    Returns:
        The sup-norm difference

    Raises:
        ComparisonFailedError: If the difference is not below tolerance
        FingerprintMismatchError: If the two results come from different models or grids
    """
    result = read_result(path_a)
    if reference is not None:
        if reference not in REFERENCES:
            raise PipelineError(f"Unknown reference '{reference}', expected one of {', '.join(REFERENCES)}")
        epsilon, gamma_c = header_energies(result.metadata, path_a)
        _, other = rabi_series(epsilon, gamma_c, result.dt, result.n_points - 1)
    elif path_b is not None:
        second = read_result(path_b)
        if not _same_grid(result.dt, second.dt):
            raise FingerprintMismatchError(f"Results use different time steps: {result.dt} vs {second.dt}")
        _check_same_model(result.metadata, second.metadata, "Results")
        if second.sigma_z is None:
            raise PipelineError(f"{second.kind} result has no sigma_z to compare")
        other = second.sigma_z
    else:
        raise PipelineError("compare needs a second result file or a reference")

    metric = sigma_z_difference(result, other)
    logger.info("sigma_z sup-norm difference %.3e (tolerance %.3e)", metric, tolerance)
    if metric != 0.0 and not metric < tolerance:
        raise ComparisonFailedError(metric, tolerance)
    return metric
