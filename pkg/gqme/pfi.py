"""
Projection-free inputs from the electronic propagator.

F = i dU/dtau and Fdot = i d^2U/dtau^2 by second-order finite differences
on the uniform grid; Z_jk = -i F_{jk,gamma gamma} for a product initial
state with electronic population gamma.
"""

import logging
from typing import Dict, Optional

import numpy as np

from spin_boson.liouvillian import liouville_index
from spin_boson.models import ElectronicLiouvillian

from .models import PfiSeries

logger = logging.getLogger(__name__)

MIN_POINTS = 3
# Population blocks of exact inputs are imaginary; above this the inputs are suspect.
REALNESS_WARNING = 1e-3


class PfiError(ValueError):
    """Base error for PFI construction."""
    pass


class GridTooShortError(PfiError):
    """Raised when a series has too few points to differentiate."""
    pass


class MissingPropagationError(PfiError):
    """Raised when a propagation needed for a column or kernel is absent."""
    pass


def _require(name: str, values: Optional[np.ndarray]) -> np.ndarray:
    if values is None:
        raise MissingPropagationError(f"Propagation from initial state {name} is missing")
    values = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(values)):
        raise MissingPropagationError(f"Propagation from initial state {name} has non-finite entries")
    return values


def assemble_offdiagonal_initial(
    u_dd: Optional[np.ndarray],
    u_aa: Optional[np.ndarray],
    u_plus: Optional[np.ndarray],
    u_y: Optional[np.ndarray],
) -> Dict[str, np.ndarray]:
    """Columns for the coherence initial conditions |D><A| and |A><D|.

    Uses |D><A| = |+><+| + i|y><y| - (1+i)/2 (|D><D| + |A><A|) and its
    counterpart with the sign of the imaginary combination flipped.

    Args:
        u_dd, u_aa, u_plus, u_y: (N, 4) reduced densities from the pure
            initial states D, A, + and y, in Liouville ordering

    Returns:
        {"DA": (N, 4), "AD": (N, 4)}

    Raises:
        MissingPropagationError: If any input is absent or non-finite
    """
    u_dd = _require("D", u_dd)
    u_aa = _require("A", u_aa)
    u_plus = _require("PLUS", u_plus)
    u_y = _require("Y", u_y)
    shapes = {u.shape for u in (u_dd, u_aa, u_plus, u_y)}
    if len(shapes) != 1:
        raise MissingPropagationError(f"Pure-state propagations differ in shape: {sorted(shapes)}")

    populations = u_dd + u_aa
    return {
        "DA": u_plus + 1j * u_y - 0.5 * (1.0 + 1.0j) * populations,
        "AD": u_plus - 1j * u_y - 0.5 * (1.0 - 1.0j) * populations,
    }


def second_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative along axis 0.

    Central 3-point stencil inside, one-sided 4-point stencils at the ends
    (second order). With exactly three points the ends reuse the central value.
    """
    values = np.asarray(values)
    n = values.shape[0]
    if n < MIN_POINTS:
        raise GridTooShortError(f"Need at least {MIN_POINTS} grid points, got {n}")
    result = np.empty_like(values)
    result[1:-1] = values[2:] - 2.0 * values[1:-1] + values[:-2]
    if n >= 4:
        result[0] = 2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]
        result[-1] = 2.0 * values[-1] - 5.0 * values[-2] + 4.0 * values[-3] - values[-4]
    else:
        result[0] = result[1]
        result[-1] = result[1]
    return result / dt**2


def differentiate(series, liouvillian=None, gamma: str = "D") -> PfiSeries:
    """Build F, Fdot and Z from a U-series.

    Args:
        series: PropagatorSeries on a uniform grid with at least 3 points
        liouvillian: Projected Liouvillian; when given, F(0) is set to it and
            the stencil's deviation from it is recorded
        gamma: Initial electronic population used for Z ("D" or "A")

    Returns:
        PfiSeries carrying the series metadata forward

    Raises:
        GridTooShortError: If the series has fewer than 3 points
    """
    entries = series.entries
    if entries.shape[0] < MIN_POINTS:
        raise GridTooShortError(f"Need at least {MIN_POINTS} grid points, got {entries.shape[0]}")
    dt = series.dt

    F = 1j * np.gradient(entries, dt, axis=0, edge_order=2)
    Fdot = 1j * second_derivative(entries, dt)

    metadata = dict(series.metadata)
    if liouvillian is not None:
        matrix = liouvillian.matrix if isinstance(liouvillian, ElectronicLiouvillian) else np.asarray(liouvillian)
        deviation = float(np.nanmax(np.abs(F[0] - matrix))) if np.any(np.isfinite(F[0])) else 0.0
        F[0] = np.where(np.isnan(F[0]), np.nan, matrix)
        metadata["f0_stencil_deviation"] = deviation
        logger.debug("F(0) stencil deviates from <L> by %.3e", deviation)

    gamma = str(gamma).upper()
    Z = -1j * F[:, :, liouville_index(gamma + gamma)]

    pfi = PfiSeries(dt=dt, F=F, Fdot=Fdot, Z=Z, gamma=gamma, metadata=metadata)
    realness = pfi.population_block_realness()
    if realness > REALNESS_WARNING:
        logger.warning("PFI population blocks carry a real part (ratio %.2e); inputs may be inexact", realness)
    return pfi
