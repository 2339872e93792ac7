"""
Discretization of the Ohmic bath and thermal Bogoliubov angles.

Modes are placed at quantiles of the normalized density
rho(w) ~ exp(-w / omega_c) on (0, omega_max], so each mode carries an
equal share of the reorganization energy.
"""

import logging

import numpy as np
from scipy.integrate import quad

from .models import DiscretizedBath, SpinBosonModel, SpinBosonParams

logger = logging.getLogger(__name__)


class ModelError(ValueError):
    """Base exception for invalid model construction."""
    pass


class BathDiscretizationError(ModelError):
    """Raised when the bath cannot be discretized."""
    pass


def spectral_density(omega, xi: float, omega_c: float):
    """Ohmic spectral density J(w) = (pi/2) xi w exp(-w / omega_c)."""
    omega = np.asarray(omega, dtype=float)
    return 0.5 * np.pi * xi * omega * np.exp(-omega / omega_c)


def bogoliubov_angles(omegas, beta: float) -> np.ndarray:
    """Thermal Bogoliubov angles theta_k = arctanh(exp(-beta w_k / 2)).

    Args:
        omegas: Mode frequencies, all strictly positive
        beta: Inverse temperature (np.inf gives the zero-temperature limit)

    Returns:
        Array of angles, one per mode

    Raises:
        BathDiscretizationError: If any frequency is not positive or beta <= 0
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(omegas <= 0):
        raise BathDiscretizationError(
            f"Bogoliubov angles need positive frequencies, got min {omegas.min()}"
        )
    if not beta > 0:
        raise BathDiscretizationError(f"beta must be positive, got {beta}")
    return np.arctanh(np.exp(-0.5 * beta * omegas))


def discretize_bath(params: SpinBosonParams) -> DiscretizedBath:
    """Discretize the Ohmic spectral density into n_modes harmonic modes.

    w_k = -omega_c ln(1 - ((k - 1/2)/N)(1 - exp(-omega_max/omega_c)))
    c_k^2 = xi w_k^2 omega_c (1 - exp(-omega_max/omega_c)) / N

    Raises:
        BathDiscretizationError: If n_modes < 1 or omega_max <= 0
    """
    n_modes = params.n_modes
    if n_modes < 1:
        raise BathDiscretizationError(f"n_modes must be at least 1, got {n_modes}")
    if params.omega_max <= 0:
        raise BathDiscretizationError(f"omega_max must be positive, got {params.omega_max}")

    window = -np.expm1(-params.omega_max / params.omega_c)
    quantiles = (np.arange(1, n_modes + 1) - 0.5) / n_modes
    omegas = -params.omega_c * np.log1p(-quantiles * window)
    couplings = np.sqrt(params.xi * params.omega_c * window / n_modes) * omegas
    thetas = bogoliubov_angles(omegas, params.beta)

    logger.debug(
        "Discretized bath: %d modes on (%.4g, %.4g], reorganization energy %.6g",
        n_modes, omegas[0], omegas[-1], float(np.sum(couplings**2 / (2.0 * omegas**2))),
    )
    return DiscretizedBath(omegas=omegas, couplings=couplings, thetas=thetas)


def build_model(params: SpinBosonParams) -> SpinBosonModel:
    """Bundle parameters with their discretized bath."""
    return SpinBosonModel(params=params, bath=discretize_bath(params))


def reorganization_energy(bath: DiscretizedBath) -> float:
    """Discrete reorganization energy sum_k c_k^2 / (2 w_k^2)."""
    return float(np.sum(bath.couplings**2 / (2.0 * bath.omegas**2)))


def continuum_reorganization_energy(params: SpinBosonParams) -> float:
    """(1/pi) * integral of J(w)/w over (0, omega_max]."""
    value, _ = quad(
        lambda w: spectral_density(w, params.xi, params.omega_c) / w,
        0.0,
        params.omega_max,
    )
    return value / np.pi


def reconstruct_spectral_density(bath: DiscretizedBath, edges) -> np.ndarray:
    """Bin sum_k (pi/2)(c_k^2/w_k) delta(w - w_k) into a histogram density."""
    weights = 0.5 * np.pi * bath.couplings**2 / bath.omegas
    hist, _ = np.histogram(bath.omegas, bins=edges, weights=weights)
    return hist / np.diff(edges)
