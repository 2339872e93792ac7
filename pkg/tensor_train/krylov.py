"""
Lanczos approximation of exp(-i dt H) v for Hermitian H given as a matvec.
"""

import logging
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

logger = logging.getLogger(__name__)

# Below this subdiagonal the Krylov space is invariant.
BREAKDOWN_TOL = 1e-14
MAX_HALVINGS = 12


def expm_krylov(
    matvec: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    dt: float,
    tol: float = 1e-12,
    max_dim: int = 40,
    _depth: int = 0,
) -> np.ndarray:
    """Apply exp(-i dt H) to v with a Lanczos basis of adaptive size.

    The a-posteriori estimate beta_k |e_k^T exp(-i dt T) e_1| is checked
    after every new vector; when the basis cap is reached without meeting
    tol the step is split in two.

    Args:
        matvec: Function applying the Hermitian operator to an array shaped like v
        v: Starting array (any shape)
        dt: Time step; negative values propagate backwards
        tol: Relative error tolerance
        max_dim: Largest Krylov dimension before the step is split

    Returns:
        Array with the shape of v
    """
    shape = v.shape
    v0 = np.asarray(v, dtype=complex).reshape(-1)
    beta0 = np.linalg.norm(v0)
    if beta0 == 0.0 or dt == 0.0:
        return v0.reshape(shape).copy()

    dim_cap = min(max_dim, v0.size)
    basis = np.zeros((dim_cap, v0.size), dtype=complex)
    basis[0] = v0 / beta0
    alphas = []
    betas = []
    coeffs = None
    converged = False

    for j in range(dim_cap):
        w = np.asarray(matvec(basis[j].reshape(shape)), dtype=complex).reshape(-1)
        alpha = float(np.vdot(basis[j], w).real)
        w = w - alpha * basis[j]
        if j > 0:
            w = w - betas[j - 1] * basis[j - 1]
        # full reorthogonalization keeps the small basis orthonormal
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)

        evals, evecs = eigh_tridiagonal(np.array(alphas), np.array(betas)) if j > 0 else (
            np.array(alphas), np.ones((1, 1))
        )
        coeffs = evecs @ (np.exp(-1j * dt * evals) * evecs[0, :].conj())

        if beta < BREAKDOWN_TOL * max(1.0, abs(alpha)):
            converged = True
            break
        if beta * abs(coeffs[-1]) < tol:
            converged = True
            break
        if j + 1 < dim_cap:
            betas.append(beta)
            basis[j + 1] = w / beta

    if not converged and dim_cap < v0.size:
        if _depth >= MAX_HALVINGS:
            logger.warning("Krylov exponential did not reach tol=%g after %d halvings", tol, _depth)
        else:
            half = expm_krylov(matvec, v, 0.5 * dt, tol, max_dim, _depth + 1)
            return expm_krylov(matvec, half, 0.5 * dt, tol, max_dim, _depth + 1)

    k = len(coeffs)
    result = beta0 * (basis[:k].T @ coeffs)
    return result.reshape(shape)
