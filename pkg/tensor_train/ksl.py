"""
Fixed-rank projector-splitting (KSL) integration of d psi / dt = -i H psi.

One-site sweeps: each core is propagated forward with its local effective
Hamiltonian, factored, and the bond matrix is propagated backward before
being absorbed into the neighbour. Order 2 composes a left-to-right and a
right-to-left half-step sweep.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg

from .krylov import expm_krylov
from .ops import _left_environment_update, max_bond_ranks, right_orthogonalize
from .tensor import TensorTrainOperator, TensorTrainVector

logger = logging.getLogger(__name__)

Observer = Callable[[int, TensorTrainVector], None]

RANK_PADDING_NOISE = 1e-12
RANK_PADDING_SEED = 20240101


class KslIntegrationError(RuntimeError):
    """Base exception for KSL time stepping."""
    pass


class RankMismatchError(KslIntegrationError):
    """Raised when a state does not live on the configured rank manifold."""
    pass


class NonFiniteStateError(KslIntegrationError):
    """Raised when a step produces NaN or infinite entries."""
    pass


@dataclass
class KslConfig:
    """
    Configuration of the KSL integrator.
    Ranks are capped per bond by the dimension products on either side.
    """
    dt: float
    rank: int = 20
    order: int = 2
    krylov_tol: float = 1e-12
    krylov_dim: int = 40

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.rank < 1:
            raise ValueError(f"rank must be at least 1, got {self.rank}")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if not self.krylov_tol > 0:
            raise ValueError(f"krylov_tol must be positive, got {self.krylov_tol}")


def manifold_ranks(mode_dims, rank: int):
    """Ranks (r_0..r_d) of the fixed-rank manifold for these dimensions."""
    return max_bond_ranks(mode_dims, rank)


def inflate_rank(
    psi: TensorTrainVector,
    rank: int,
    noise: float = RANK_PADDING_NOISE,
    seed: int = RANK_PADDING_SEED,
) -> TensorTrainVector:
    """Pad a low-rank state to the manifold ranks and right-orthonormalize it.

    The original cores occupy the leading blocks; the padding is noise of
    the given amplitude, so the represented state moves by O(noise^2).
    """
    target = manifold_ranks(psi.mode_dims, rank)
    rng = np.random.default_rng(seed)
    cores = []
    for i, core in enumerate(psi.cores):
        r0, n, r1 = core.shape
        t0, t1 = target[i], target[i + 1]
        if r0 > t0 or r1 > t1:
            raise RankMismatchError(
                f"Core {i} ranks ({r0}, {r1}) exceed manifold ranks ({t0}, {t1})"
            )
        padded = noise * (rng.standard_normal((t0, n, t1)) + 1j * rng.standard_normal((t0, n, t1)))
        padded[:r0, :, :r1] = core
        cores.append(padded)
    return TensorTrainVector(cores=tuple(right_orthogonalize(cores)))


def _right_environment_update(env: np.ndarray, core: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Contract (bra, mpo, ket) environment with one site from the right."""
    t = np.tensordot(core, env, axes=([2], [2]))  # a, s, q, v
    t = np.tensordot(w, t, axes=([2, 3], [1, 3]))  # w, t, a, q
    return np.tensordot(core.conj(), t, axes=([1, 2], [1, 3]))  # p, w, a


def _site_matvec(left: np.ndarray, w: np.ndarray, right: np.ndarray):
    def matvec(x: np.ndarray) -> np.ndarray:
        t = np.tensordot(left, x, axes=([2], [0]))  # p, w, s, b
        t = np.tensordot(t, w, axes=([1, 2], [0, 2]))  # p, b, t, v
        return np.tensordot(t, right, axes=([1, 3], [2, 1]))  # p, t, q
    return matvec


def _bond_matvec(left: np.ndarray, right: np.ndarray):
    def matvec(c: np.ndarray) -> np.ndarray:
        t = np.tensordot(left, c, axes=([2], [0]))  # p, w, b
        return np.tensordot(t, right, axes=([1, 2], [1, 2]))  # p, q
    return matvec


class KslIntegrator:
    """Reusable stepper bound to one Hamiltonian and configuration."""

    def __init__(self, hamiltonian: TensorTrainOperator, cfg: KslConfig):
        self.hamiltonian = hamiltonian
        self.cfg = cfg
        self.ranks = manifold_ranks(hamiltonian.mode_dims, cfg.rank)

    def _evolve(self, matvec, x: np.ndarray, dt: float) -> np.ndarray:
        return expm_krylov(matvec, x, dt, tol=self.cfg.krylov_tol, max_dim=self.cfg.krylov_dim)

    def step(self, psi: TensorTrainVector) -> TensorTrainVector:
        """Advance psi by one time step on the fixed-rank manifold."""
        if psi.mode_dims != self.hamiltonian.mode_dims:
            raise RankMismatchError(
                f"State dims {psi.mode_dims} do not match Hamiltonian dims {self.hamiltonian.mode_dims}"
            )
        if psi.ranks != self.ranks:
            raise RankMismatchError(f"State ranks {psi.ranks} differ from manifold ranks {self.ranks}")

        cores = right_orthogonalize(psi.cores)
        mpo = self.hamiltonian.cores
        d = len(cores)
        trivial = np.ones((1, 1, 1), dtype=complex)
        left_env: List[Optional[np.ndarray]] = [trivial] + [None] * (d - 1)
        right_env: List[Optional[np.ndarray]] = [None] * (d - 1) + [trivial]
        for i in range(d - 1, 0, -1):
            right_env[i - 1] = _right_environment_update(right_env[i], cores[i], mpo[i])

        if self.cfg.order == 1:
            self._sweep_left_to_right(cores, mpo, left_env, right_env, self.cfg.dt)
        else:
            half = 0.5 * self.cfg.dt
            self._sweep_left_to_right(cores, mpo, left_env, right_env, half)
            self._sweep_right_to_left(cores, mpo, left_env, right_env, half)

        for i, core in enumerate(cores):
            if not np.all(np.isfinite(core)):
                raise NonFiniteStateError(f"Non-finite entries in core {i} after KSL step")
        return TensorTrainVector(cores=tuple(cores))

    def _sweep_left_to_right(self, cores, mpo, left_env, right_env, h: float) -> None:
        d = len(cores)
        for i in range(d):
            cores[i] = self._evolve(_site_matvec(left_env[i], mpo[i], right_env[i]), cores[i], h)
            if i == d - 1:
                break
            r0, n, r1 = cores[i].shape
            q, r = np.linalg.qr(cores[i].reshape(r0 * n, r1))
            cores[i] = q.reshape(r0, n, r1)
            left_env[i + 1] = _left_environment_update(left_env[i], cores[i], mpo[i])
            r = self._evolve(_bond_matvec(left_env[i + 1], right_env[i]), r, -h)
            cores[i + 1] = np.tensordot(r, cores[i + 1], axes=([1], [0]))

    def _sweep_right_to_left(self, cores, mpo, left_env, right_env, h: float) -> None:
        d = len(cores)
        for i in range(d - 1, -1, -1):
            cores[i] = self._evolve(_site_matvec(left_env[i], mpo[i], right_env[i]), cores[i], h)
            if i == 0:
                break
            r0, n, r1 = cores[i].shape
            r, q = scipy.linalg.rq(cores[i].reshape(r0, n * r1), mode="economic")
            cores[i] = q.reshape(r0, n, r1)
            right_env[i - 1] = _right_environment_update(right_env[i], cores[i], mpo[i])
            r = self._evolve(_bond_matvec(left_env[i], right_env[i - 1]), r, -h)
            cores[i - 1] = np.tensordot(cores[i - 1], r, axes=([2], [0]))


def ksl_step(psi: TensorTrainVector, H: TensorTrainOperator, cfg: KslConfig) -> TensorTrainVector:
    """One KSL step of size cfg.dt."""
    return KslIntegrator(H, cfg).step(psi)


def propagate(
    psi0: TensorTrainVector,
    H: TensorTrainOperator,
    cfg: KslConfig,
    n_steps: int,
    observer: Optional[Observer] = None,
) -> TensorTrainVector:
    """Propagate for n_steps, calling observer(step, state) after every step.

    A state below the manifold ranks is inflated before the first step.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be non-negative, got {n_steps}")
    if n_steps == 0:
        return psi0
    integrator = KslIntegrator(H, cfg)
    psi = psi0
    if psi.ranks != integrator.ranks:
        logger.debug("Inflating ranks %s -> %s", psi.ranks, integrator.ranks)
        psi = inflate_rank(psi, cfg.rank)
    for step in range(1, n_steps + 1):
        psi = integrator.step(psi)
        if observer is not None:
            observer(step, psi)
    return psi
