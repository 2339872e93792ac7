"""
GQME machinery: projection-free inputs, Volterra solvers, RK4 propagation
and the memory-time search.
"""

from .models import (
    GqmeType,
    VolterraScheme,
    PfiSeries,
    KernelSeries,
    InhomSeries,
    GqmeResult,
)
from .pfi import (
    PfiError,
    GridTooShortError,
    MissingPropagationError,
    assemble_offdiagonal_initial,
    second_derivative,
    differentiate,
)
from .volterra import (
    VolterraError,
    VolterraConvergenceError,
    GridMismatchError,
    CancellationReport,
    trapezoid_convolution,
    volterra_residual,
    solve_kernel,
    solve_inhomogeneous,
    error_cancellation_report,
)
from .propagator import (
    GqmeIntegrationError,
    default_sigma0,
    propagate_gqme,
    combine_single_population,
)
from .memory_time import (
    REFERENCE_MEMORY_TIMES,
    MemoryTimeSearchError,
    MemoryTimeCandidate,
    MemoryTimeResult,
    max_deviation,
    memory_time_search,
)

__all__ = [
    # Models
    "GqmeType",
    "VolterraScheme",
    "PfiSeries",
    "KernelSeries",
    "InhomSeries",
    "GqmeResult",
    # PFIs
    "PfiError",
    "GridTooShortError",
    "MissingPropagationError",
    "assemble_offdiagonal_initial",
    "second_derivative",
    "differentiate",
    # Volterra
    "VolterraError",
    "VolterraConvergenceError",
    "GridMismatchError",
    "CancellationReport",
    "trapezoid_convolution",
    "volterra_residual",
    "solve_kernel",
    "solve_inhomogeneous",
    "error_cancellation_report",
    # Propagation
    "GqmeIntegrationError",
    "default_sigma0",
    "propagate_gqme",
    "combine_single_population",
    # Memory time
    "REFERENCE_MEMORY_TIMES",
    "MemoryTimeSearchError",
    "MemoryTimeCandidate",
    "MemoryTimeResult",
    "max_deviation",
    "memory_time_search",
]
