"""
End-to-end pipeline orchestrator.

Runs propagation, PFI extraction, kernel solves and GQME propagation for
the requested GQME types from one configuration, writing every artifact
and a manifest into one output directory.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional

from gqme import (
    GqmeIntegrationError,
    GqmeType,
    MemoryTimeSearchError,
    PfiError,
    VolterraError,
    combine_single_population,
)
from spin_boson import ConfigError, ModelError, load_params
from tensor_train import KslIntegrationError, TensorTrainError
from tfd import DenseLimitError, InvalidElectronicStateError, PropagationError, union_of_states

from .formats import PipelineError, read_propagator_series, read_result, write_result
from .models import RunManifest, StageRecord
from .stages import (
    cmd_gqme,
    cmd_kernel,
    cmd_memtime,
    cmd_pfi,
    direct_result,
    propagate_to_file,
    sigma_z_difference,
)

logger = logging.getLogger(__name__)

ALL_TYPES = (
    GqmeType.FULL,
    GqmeType.POPULATIONS_ONLY,
    GqmeType.DONOR_ONLY,
    GqmeType.ACCEPTOR_ONLY,
)

# Errors that already describe what went wrong; the orchestrator passes them through.
DOMAIN_ERRORS = (
    PipelineError,
    ConfigError,
    ModelError,
    TensorTrainError,
    KslIntegrationError,
    PropagationError,
    DenseLimitError,
    InvalidElectronicStateError,
    PfiError,
    VolterraError,
    GqmeIntegrationError,
    MemoryTimeSearchError,
    FileNotFoundError,
)


def _step(name: str, action):
    try:
        return action()
    except DOMAIN_ERRORS:
        raise
    except Exception as e:
        raise PipelineError(f"Step '{name}' failed unexpectedly: {e}")


def run_pipeline(
    config,
    out_dir,
    gqme_types: Optional[Iterable] = None,
    backend: Optional[str] = None,
    rank: Optional[int] = None,
    overrides: Optional[Iterable[str]] = None,
    jobs: int = 1,
    memtime: bool = False,
) -> RunManifest:
    """Run every stage for one configuration.

    This orchestrator:
    1. Loads and validates the configuration
    2. Propagates the initial states the requested types need
    3. Extracts the PFIs
    4. Writes the direct dynamics read off U(t)
    5. Solves kernels (and inhomogeneous terms) per type
    6. Propagates each GQME, optionally searching the memory time
    7. Joins the single-population results and compares against the direct dynamics
    8. Writes manifest.json

    Args:
        config: YAML configuration path
        out_dir: Directory receiving all artifacts
        gqme_types: Types to run (default: all four)
        backend: Backend override
        rank: TT rank override
        overrides: KEY=VALUE overrides
        jobs: Concurrent trajectories and per-type solves
        memtime: Search the memory time instead of using t_mem_max

    Returns:
        RunManifest of the run

    Raises:
        PipelineError: If a step fails unexpectedly
        ConfigError, PropagationError, VolterraError, ...: Domain failures, unchanged
    """
    out_dir = Path(out_dir)
    types = [GqmeType.parse(t) for t in (gqme_types or ALL_TYPES)]

    # Step 1: Configuration
    params = _step(
        "config",
        lambda: load_params(config, overrides, extra={"backend": backend, "tt_rank": rank}),
    )
    manifest = RunManifest(config_path=str(config), model_fingerprint=params.fingerprint())
    out_dir.mkdir(parents=True, exist_ok=True)

    # Step 2: Propagation
    u_path = out_dir / "u_series.dat"
    states = union_of_states(types)
    logger.info("Propagating initial states %s", ", ".join(s.value for s in states))
    manifest.add(_step("propagate", lambda: propagate_to_file(params, u_path, states=states, jobs=jobs)))

    # Step 3: PFIs
    pfi_path = out_dir / "pfi.dat"
    manifest.add(_step("pfi", lambda: cmd_pfi(u_path, pfi_path)))

    # Step 4: Direct dynamics
    direct_path = out_dir / "result_Direct.dat"

    def write_direct() -> StageRecord:
        series = read_propagator_series(u_path)
        fingerprint = write_result(direct_path, direct_result(series), input_fingerprint=series.metadata["fingerprint"])
        return StageRecord(
            stage="direct",
            output=str(direct_path),
            fingerprint=fingerprint,
            input_fingerprint=series.metadata["fingerprint"],
            wall_time=0.0,
        )

    manifest.add(_step("direct", write_direct))

    # Step 5: Kernels
    def solve(gqme_type: GqmeType) -> List[StageRecord]:
        return cmd_kernel(
            pfi_path,
            gqme_type,
            out_dir / f"kernel_{gqme_type.value}.dat",
            tol=params.volterra_tol,
            max_iter=params.volterra_max_iter,
        )

    if jobs > 1 and len(types) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            kernel_records = _step("kernel", lambda: list(pool.map(solve, types)))
    else:
        kernel_records = [_step(f"kernel {t.value}", lambda t=t: solve(t)) for t in types]
    for gqme_type, records in zip(types, kernel_records):
        for record in records:
            manifest.add(record)
        manifest.kernel_iterations[gqme_type.value] = records[0].details["iterations_used"]

    # Step 6: GQME propagation
    result_paths = {}
    for gqme_type in types:
        kernel_path = out_dir / f"kernel_{gqme_type.value}.dat"
        result_path = out_dir / f"result_{gqme_type.value}.dat"
        if memtime:
            record = _step(
                f"memtime {gqme_type.value}",
                lambda: cmd_memtime(
                    kernel_path,
                    result_path,
                    conv_param=params.conv_param,
                    t_mem_max=params.effective_t_mem_max,
                    t_final=params.effective_gqme_t_final,
                    stride=params.memtime_stride,
                    jobs=jobs,
                ),
            )
        else:
            record = _step(
                f"gqme {gqme_type.value}",
                lambda: cmd_gqme(
                    kernel_path,
                    result_path,
                    t_final=params.effective_gqme_t_final,
                    memory_time=params.effective_t_mem_max,
                ),
            )
        manifest.add(record)
        manifest.memory_times[gqme_type.value] = record.details["memory_time"]
        result_paths[gqme_type.value] = result_path

    # Step 7: Single-population pair and comparisons
    if GqmeType.DONOR_ONLY in types and GqmeType.ACCEPTOR_ONLY in types:
        pair_path = out_dir / "result_DonorAcceptor.dat"

        def write_pair() -> StageRecord:
            pair = combine_single_population(
                read_result(result_paths[GqmeType.DONOR_ONLY.value]),
                read_result(result_paths[GqmeType.ACCEPTOR_ONLY.value]),
            )
            fingerprint = write_result(pair_path, pair)
            return StageRecord(
                stage="combine",
                output=str(pair_path),
                fingerprint=fingerprint,
                wall_time=0.0,
                details={"trace_deviation": pair.trace_deviation()},
            )

        manifest.add(_step("combine", write_pair))
        result_paths["DonorAcceptor"] = pair_path

    direct = read_result(direct_path)
    for kind, path in result_paths.items():
        result = read_result(path)
        if result.sigma_z is not None:
            manifest.comparisons[kind] = sigma_z_difference(result, direct.sigma_z)

    # Step 8: Manifest
    manifest.save(out_dir / "manifest.json")
    logger.info("Pipeline finished; manifest at %s", out_dir / "manifest.json")
    return manifest
