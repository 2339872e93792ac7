"""
Volterra solvers for memory kernels and inhomogeneous terms.

Both unknowns satisfy a linear Volterra equation of the second kind,

    X(t) = A(t) + i * int_0^t F(t - s) X(s) ds,

discretized with the trapezoidal rule on the PFI grid. The marching
scheme walks the grid once and resolves the implicit endpoint term by
fixed-point iteration at each point; the Picard scheme sweeps the whole
grid per iteration.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from spin_boson.liouvillian import liouville_index
from spin_boson.models import ElectronicLiouvillian

from .models import GqmeType, InhomSeries, KernelSeries, PfiSeries, VolterraScheme
from .pfi import MissingPropagationError

logger = logging.getLogger(__name__)

# Loose per-type iteration envelopes at tol = 1e-10.
ITERATION_ENVELOPE = {
    GqmeType.FULL: 10,
    GqmeType.POPULATIONS_ONLY: 5,
    GqmeType.DONOR_ONLY: 4,
    GqmeType.ACCEPTOR_ONLY: 4,
}


class VolterraError(RuntimeError):
    """Base error for the Volterra solvers."""
    pass


class VolterraConvergenceError(VolterraError):
    """Raised when the fixed-point iteration does not converge."""
    pass


class GridMismatchError(VolterraError):
    """Raised when the requested time range does not fit the PFI grid."""
    pass


@dataclass(frozen=True)
class CancellationReport:
    """Kernel changes induced by an opposite-sign perturbation of F_{DD,DD} and F_{DD,AA}."""
    delta: float
    populations_change: float
    donor_change: float

    @property
    def cancels(self) -> bool:
        return self.populations_change <= self.donor_change


def _history_block(F: np.ndarray, X: np.ndarray, n: int) -> np.ndarray:
    """sum_{m=1}^{n-1} F[n-m] @ X[m] as one matrix product."""
    if n < 2:
        return np.zeros(F.shape[1:2] + X.shape[2:], dtype=complex)
    s = F.shape[1]
    lagged = F[n - 1:0:-1].transpose(1, 0, 2).reshape(s, (n - 1) * s)
    return lagged @ X[1:n].reshape((n - 1) * s, -1)


def trapezoid_convolution(F: np.ndarray, X: np.ndarray, dt: float) -> np.ndarray:
    """C_n = int_0^{t_n} F(t_n - s) X(s) ds by the trapezoidal rule, C_0 = 0."""
    C = np.zeros_like(X)
    for n in range(1, X.shape[0]):
        C[n] = dt * (
            0.5 * F[n] @ X[0] + _history_block(F, X, n) + 0.5 * F[0] @ X[n]
        )
    return C


def volterra_residual(F: np.ndarray, A: np.ndarray, X: np.ndarray, dt: float) -> float:
    """Sup-norm of X - A - i (F * X) with the convolution recomputed from scratch."""
    if X.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(X - A - 1j * trapezoid_convolution(F, X, dt))))


def _march(F: np.ndarray, A: np.ndarray, dt: float, tol: float, max_iter: int) -> Tuple[np.ndarray, int]:
    X = np.zeros_like(A)
    X[0] = A[0]
    endpoint = 0.5j * dt * F[0]
    worst = 1 if X.shape[0] > 0 else 0
    for n in range(1, X.shape[0]):
        known = A[n] + 1j * dt * (0.5 * F[n] @ X[0] + _history_block(F, X, n))
        current = known
        for iteration in range(1, max_iter + 1):
            updated = known + endpoint @ current
            change = float(np.max(np.abs(updated - current)))
            current = updated
            if change < tol:
                break
        else:
            raise VolterraConvergenceError(
                f"Fixed point at t = {n * dt:.6g} did not converge in {max_iter} iterations "
                f"(last change {change:.3e})"
            )
        X[n] = current
        worst = max(worst, iteration)
    return X, worst


def _picard(F: np.ndarray, A: np.ndarray, dt: float, tol: float, max_iter: int) -> Tuple[np.ndarray, int]:
    X = A.copy()
    for iteration in range(1, max_iter + 1):
        updated = A + 1j * trapezoid_convolution(F, X, dt)
        change = float(np.max(np.abs(updated - X))) if X.size else 0.0
        X = updated
        logger.debug("Picard sweep %d: change %.3e", iteration, change)
        if change < tol:
            return X, iteration
    raise VolterraConvergenceError(
        f"Picard iteration did not converge in {max_iter} sweeps (last change {change:.3e})"
    )


def _solve(F, A, dt, tol, max_iter, scheme) -> Tuple[np.ndarray, int, float]:
    scheme = VolterraScheme(scheme)
    if scheme == VolterraScheme.MARCHING:
        X, iterations = _march(F, A, dt, tol, max_iter)
    else:
        X, iterations = _picard(F, A, dt, tol, max_iter)
    return X, iterations, volterra_residual(F, A, X, dt)


def _grid_points(pfi: PfiSeries, t_max: Optional[float]) -> int:
    if t_max is None:
        return pfi.n_points
    n_points = int(round(t_max / pfi.dt)) + 1
    if n_points > pfi.n_points:
        raise GridMismatchError(
            f"Requested range {t_max} exceeds the PFI grid end {pfi.times[-1]:.6g}"
        )
    return n_points


def _check_inputs(gqme_type: GqmeType, *arrays: np.ndarray) -> None:
    for values in arrays:
        if not np.all(np.isfinite(values)):
            raise MissingPropagationError(
                f"PFIs needed by the {gqme_type.value} GQME contain missing columns; "
                f"propagate the required initial states first"
            )


def _envelope_check(gqme_type: GqmeType, iterations: int, tol: float) -> None:
    limit = ITERATION_ENVELOPE[gqme_type]
    if iterations > limit and tol >= 1e-10:
        logger.warning(
            "%s solve needed %d iterations (expected at most %d)", gqme_type.value, iterations, limit
        )


def solve_kernel(
    pfi: PfiSeries,
    gqme_type,
    liouvillian=None,
    tol: float = 1e-10,
    max_iter: int = 50,
    scheme=VolterraScheme.MARCHING,
    tau_max: Optional[float] = None,
) -> KernelSeries:
    """Memory kernel K(tau) = i Fdot - F <L> + i int F K restricted to the type's subset.

    The <L> term enters only for the Full kernel; it vanishes on population blocks.

    Raises:
        GridMismatchError: If tau_max exceeds the PFI grid
        VolterraConvergenceError: If the iteration does not converge
        MissingPropagationError: If required PFI elements are missing
    """
    gqme_type = GqmeType.parse(gqme_type)
    n_points = _grid_points(pfi, tau_max)
    F, Fdot = pfi.restricted(gqme_type.subset)
    F, Fdot = F[:n_points], Fdot[:n_points]
    _check_inputs(gqme_type, F, Fdot)

    A = 1j * Fdot
    if gqme_type == GqmeType.FULL:
        if liouvillian is None:
            raise VolterraError("The Full kernel needs the projected Liouvillian")
        matrix = liouvillian.matrix if isinstance(liouvillian, ElectronicLiouvillian) else np.asarray(liouvillian)
        A = A - F @ matrix

    started = time.perf_counter()
    K, iterations, residual = _solve(F, A, pfi.dt, tol, max_iter, scheme)
    logger.info(
        "%s kernel: %d points, %d iterations, residual %.2e (%.2fs)",
        gqme_type.value, n_points, iterations, residual, time.perf_counter() - started,
    )
    _envelope_check(gqme_type, iterations, tol)

    metadata = dict(pfi.metadata)
    metadata["scheme"] = VolterraScheme(scheme).value
    metadata["initial_state"] = pfi.gamma
    return KernelSeries(
        dt=pfi.dt,
        gqme_type=gqme_type,
        entries=K,
        iterations_used=iterations,
        residual=residual,
        metadata=metadata,
    )


def solve_inhomogeneous(
    pfi: PfiSeries,
    gqme_type=GqmeType.ACCEPTOR_ONLY,
    tol: float = 1e-10,
    max_iter: int = 50,
    scheme=VolterraScheme.MARCHING,
    t_max: Optional[float] = None,
) -> InhomSeries:
    """Inhomogeneous term I(t) = Z + i F sigma(0) + i int F I on the type's subset.

    For the acceptor type with gamma = D this is
    I_AA = -i F_{AA,DD} + i int F_{AA,AA} I_AA.

    Raises:
        VolterraError: If the type keeps the initial population (no inhomogeneous term)
        VolterraConvergenceError: If the iteration does not converge
    """
    gqme_type = GqmeType.parse(gqme_type)
    if not gqme_type.needs_inhom(pfi.gamma):
        raise VolterraError(
            f"{gqme_type.value} keeps the initial population {pfi.gamma}{pfi.gamma}; "
            f"its inhomogeneous term vanishes"
        )
    n_points = _grid_points(pfi, t_max)
    idx = np.asarray(gqme_type.subset, dtype=int)
    F, _ = pfi.restricted(gqme_type.subset)
    F = F[:n_points]
    Z = pfi.Z[:n_points, idx]
    _check_inputs(gqme_type, F, Z)

    sigma0 = np.zeros(len(idx), dtype=complex)
    initial = liouville_index(pfi.gamma + pfi.gamma)
    if initial in gqme_type.subset:
        sigma0[gqme_type.subset.index(initial)] = 1.0
    B = (Z + 1j * F @ sigma0)[:, :, None]

    I, iterations, residual = _solve(F, B, pfi.dt, tol, max_iter, scheme)
    logger.info(
        "%s inhomogeneous term: %d points, %d iterations, residual %.2e",
        gqme_type.value, n_points, iterations, residual,
    )
    _envelope_check(gqme_type, iterations, tol)

    metadata = dict(pfi.metadata)
    metadata["scheme"] = VolterraScheme(scheme).value
    metadata["initial_state"] = pfi.gamma
    return InhomSeries(
        dt=pfi.dt,
        gqme_type=gqme_type,
        entries=I[:, :, 0],
        iterations_used=iterations,
        residual=residual,
        metadata=metadata,
    )


def error_cancellation_report(
    pfi: PfiSeries,
    delta: float,
    tol: float = 1e-10,
    max_iter: int = 50,
    tau_max: Optional[float] = None,
) -> CancellationReport:
    """Perturb F_{DD,DD} by (1 + delta) and F_{DD,AA} by (1 - delta) and re-solve.

    Reports max |dK_{DD,DD}| for the populations-only and donor-only kernels.
    """
    dd, aa = liouville_index("DD"), liouville_index("AA")
    F = pfi.F.copy()
    F[:, dd, dd] *= 1.0 + delta
    F[:, dd, aa] *= 1.0 - delta
    perturbed = replace(pfi, F=F)

    changes = {}
    for gqme_type in (GqmeType.POPULATIONS_ONLY, GqmeType.DONOR_ONLY):
        base = solve_kernel(pfi, gqme_type, tol=tol, max_iter=max_iter, tau_max=tau_max)
        moved = solve_kernel(perturbed, gqme_type, tol=tol, max_iter=max_iter, tau_max=tau_max)
        changes[gqme_type] = float(np.max(np.abs(moved.element("DD", "DD") - base.element("DD", "DD"))))

    report = CancellationReport(
        delta=delta,
        populations_change=changes[GqmeType.POPULATIONS_ONLY],
        donor_change=changes[GqmeType.DONOR_ONLY],
    )
    logger.info(
        "Error cancellation at delta=%g: populations-only %.3e, donor-only %.3e",
        delta, report.populations_change, report.donor_change,
    )
    return report
