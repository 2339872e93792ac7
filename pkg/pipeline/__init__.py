"""
Pipeline plumbing: series file formats, stage commands, run manifest and
the end-to-end orchestrator.
"""

from .formats import (
    PipelineError,
    MalformedSeriesFileError,
    read_header,
    write_propagator_series,
    read_propagator_series,
    write_pfi_series,
    read_pfi_series,
    write_kernel_series,
    read_kernel_series,
    write_inhom_series,
    read_inhom_series,
    write_result,
    read_result,
    inhom_path_for,
)
from .models import RunManifest, StageRecord
from .settings import RuntimeSettings
from .stages import (
    FingerprintMismatchError,
    ComparisonFailedError,
    direct_result,
    cmd_propagate,
    cmd_pfi,
    cmd_kernel,
    cmd_gqme,
    cmd_memtime,
    cmd_compare,
)
from .runner import run_pipeline

__all__ = [
    # Errors
    "PipelineError",
    "MalformedSeriesFileError",
    "FingerprintMismatchError",
    "ComparisonFailedError",
    # Formats
    "read_header",
    "write_propagator_series",
    "read_propagator_series",
    "write_pfi_series",
    "read_pfi_series",
    "write_kernel_series",
    "read_kernel_series",
    "write_inhom_series",
    "read_inhom_series",
    "write_result",
    "read_result",
    "inhom_path_for",
    # Models
    "RunManifest",
    "StageRecord",
    "RuntimeSettings",
    # Stages
    "direct_result",
    "cmd_propagate",
    "cmd_pfi",
    "cmd_kernel",
    "cmd_gqme",
    "cmd_memtime",
    "cmd_compare",
    "run_pipeline",
]
