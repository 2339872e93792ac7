"""
Tensor-train algebra: construction, inner products, operator action,
addition, scaling, orthogonalization and SVD rounding.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .tensor import DimensionMismatchError, TensorTrainError, TensorTrainOperator, TensorTrainVector

logger = logging.getLogger(__name__)


def _check_dims(a_dims: Sequence[int], b_dims: Sequence[int]) -> None:
    if tuple(a_dims) != tuple(b_dims):
        raise DimensionMismatchError(f"Mode dimensions differ: {tuple(a_dims)} vs {tuple(b_dims)}")


def tt_from_product(vectors: Sequence[np.ndarray]) -> TensorTrainVector:
    """Rank-1 train from one vector per core.

    Raises:
        TensorTrainError: If the list is empty or a vector is zero or not 1-D
    """
    if len(vectors) == 0:
        raise TensorTrainError("Need at least one per-mode vector")
    cores = []
    for i, vec in enumerate(vectors):
        vec = np.asarray(vec, dtype=complex)
        if vec.ndim != 1:
            raise DimensionMismatchError(f"Per-mode vector {i} must be 1-D, got shape {vec.shape}")
        if not np.any(vec):
            raise TensorTrainError(f"Per-mode vector {i} is zero")
        cores.append(vec.reshape(1, -1, 1))
    return TensorTrainVector(cores=tuple(cores))


def tt_random(
    mode_dims: Sequence[int],
    ranks: Sequence[int],
    rng: Optional[np.random.Generator] = None,
) -> TensorTrainVector:
    """Random complex train with the given interior ranks (len(mode_dims) - 1 entries)."""
    rng = rng if rng is not None else np.random.default_rng()
    full_ranks = [1] + list(ranks) + [1]
    if len(full_ranks) != len(mode_dims) + 1:
        raise DimensionMismatchError("ranks must have one entry per interior bond")
    cores = []
    for i, n in enumerate(mode_dims):
        shape = (full_ranks[i], n, full_ranks[i + 1])
        cores.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return TensorTrainVector(cores=tuple(cores))


def tt_inner(a: TensorTrainVector, b: TensorTrainVector) -> complex:
    """<a|b> with conjugation on a."""
    _check_dims(a.mode_dims, b.mode_dims)
    env = np.ones((1, 1), dtype=complex)
    for core_a, core_b in zip(a.cores, b.cores):
        env = np.tensordot(env, core_a.conj(), axes=([0], [0]))  # (rb, n, ra')
        env = np.tensordot(env, core_b, axes=([0, 1], [0, 1]))  # (ra', rb')
    return complex(env[0, 0])


def tt_norm(v: TensorTrainVector) -> float:
    return float(np.sqrt(max(tt_inner(v, v).real, 0.0)))


def tt_apply(op: TensorTrainOperator, v: TensorTrainVector) -> TensorTrainVector:
    """Exact operator action; output ranks are r_i * R_i."""
    _check_dims(op.mode_dims, v.mode_dims)
    cores = []
    for w, x in zip(op.cores, v.cores):
        ra, n, _, rb = w.shape
        rc, _, rd = x.shape
        core = np.einsum("aijb,cjd->acibd", w, x).reshape(ra * rc, n, rb * rd)
        cores.append(core)
    return TensorTrainVector(cores=tuple(cores))


def tt_expectation(v: TensorTrainVector, op: TensorTrainOperator) -> complex:
    """<v|op|v> without forming the applied train."""
    _check_dims(op.mode_dims, v.mode_dims)
    env = np.ones((1, 1, 1), dtype=complex)
    for w, x in zip(op.cores, v.cores):
        env = _left_environment_update(env, x, w)
    return complex(env[0, 0, 0])


def _left_environment_update(env: np.ndarray, core: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Contract (bra, mpo, ket) environment with one site from the left."""
    t = np.tensordot(env, core, axes=([2], [0]))  # p, w, s, b
    t = np.tensordot(t, w, axes=([1, 2], [0, 2]))  # p, b, t, v
    t = np.tensordot(core.conj(), t, axes=([0, 1], [0, 2]))  # q, b, v
    return t.transpose(0, 2, 1)


def tt_add(a: TensorTrainVector, b: TensorTrainVector) -> TensorTrainVector:
    """Exact sum; interior ranks add."""
    _check_dims(a.mode_dims, b.mode_dims)
    if a.d == 1:
        return TensorTrainVector(cores=(a.cores[0] + b.cores[0],))
    cores = []
    for i, (ca, cb) in enumerate(zip(a.cores, b.cores)):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        if i == 0:
            core = np.concatenate([ca, cb], axis=2)
        elif i == a.d - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            core = np.zeros((ra0 + rb0, n, ra1 + rb1), dtype=complex)
            core[:ra0, :, :ra1] = ca
            core[ra0:, :, ra1:] = cb
        cores.append(core)
    return TensorTrainVector(cores=tuple(cores))


def tt_scale(a: TensorTrainVector, scalar: complex) -> TensorTrainVector:
    cores = list(a.cores)
    cores[0] = cores[0] * scalar
    return TensorTrainVector(cores=tuple(cores))


def apply_single_core(v: TensorTrainVector, site: int, matrix: np.ndarray) -> TensorTrainVector:
    """Act with a local matrix on one core; ranks are unchanged."""
    matrix = np.asarray(matrix, dtype=complex)
    n = v.mode_dims[site]
    if matrix.shape != (n, n):
        raise DimensionMismatchError(f"Local matrix must be {n}x{n} on core {site}, got {matrix.shape}")
    cores = list(v.cores)
    cores[site] = np.einsum("ij,ajb->aib", matrix, cores[site])
    return TensorTrainVector(cores=tuple(cores))


def right_orthogonalize(cores: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Make cores 1..d-1 right-orthonormal; the norm ends up in core 0."""
    cores = [np.array(c) for c in cores]
    for i in range(len(cores) - 1, 0, -1):
        r0, n, r1 = cores[i].shape
        r, q = scipy.linalg.rq(cores[i].reshape(r0, n * r1), mode="economic")
        k = q.shape[0]
        cores[i] = q.reshape(k, n, r1)
        cores[i - 1] = np.tensordot(cores[i - 1], r, axes=([2], [0]))
    return cores


def left_orthogonalize(cores: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Make cores 0..d-2 left-orthonormal; the norm ends up in the last core."""
    cores = [np.array(c) for c in cores]
    for i in range(len(cores) - 1):
        r0, n, r1 = cores[i].shape
        q, r = np.linalg.qr(cores[i].reshape(r0 * n, r1))
        k = q.shape[1]
        cores[i] = q.reshape(r0, n, k)
        cores[i + 1] = np.tensordot(r, cores[i + 1], axes=([1], [0]))
    return cores


def truncation_rank(singular_values: np.ndarray, delta: float, max_rank: Optional[int] = None) -> int:
    """Smallest rank whose discarded tail has Frobenius norm <= delta."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return 1
    tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]  # tail[r] = ||s[r:]||
    rank = s.size
    for r in range(1, s.size):
        if tail[r] <= delta:
            rank = r
            break
    if max_rank is not None:
        rank = min(rank, max_rank)
    return max(rank, 1)


def tt_round(
    v: TensorTrainVector,
    tol: float = 0.0,
    max_rank: Optional[int] = None,
) -> TensorTrainVector:
    """QR + SVD rounding with per-bond threshold tol * ||v|| / sqrt(d - 1).

    The result has cores 0..d-2 left-orthonormal.
    """
    if tol < 0:
        raise TensorTrainError(f"tol must be non-negative, got {tol}")
    if v.d == 1:
        return TensorTrainVector(cores=v.cores)
    cores = right_orthogonalize(v.cores)
    norm = float(np.linalg.norm(cores[0]))
    delta = tol * norm / np.sqrt(v.d - 1)
    for i in range(v.d - 1):
        r0, n, r1 = cores[i].shape
        u, s, vh = np.linalg.svd(cores[i].reshape(r0 * n, r1), full_matrices=False)
        rank = truncation_rank(s, delta, max_rank) if tol > 0 or max_rank is not None else s.size
        cores[i] = u[:, :rank].reshape(r0, n, rank)
        carry = s[:rank, None] * vh[:rank, :]
        cores[i + 1] = np.tensordot(carry, cores[i + 1], axes=([1], [0]))
    logger.debug("Rounded train to ranks %s", [c.shape[2] for c in cores[:-1]])
    return TensorTrainVector(cores=tuple(cores))


def operator_sum(a: TensorTrainOperator, b: TensorTrainOperator) -> TensorTrainOperator:
    """Exact operator sum; bond ranks add."""
    _check_dims(a.mode_dims, b.mode_dims)
    if a.d == 1:
        return TensorTrainOperator(cores=(a.cores[0] + b.cores[0],))
    cores = []
    for i, (wa, wb) in enumerate(zip(a.cores, b.cores)):
        ra0, n, _, ra1 = wa.shape
        rb0, _, _, rb1 = wb.shape
        if i == 0:
            core = np.concatenate([wa, wb], axis=3)
        elif i == a.d - 1:
            core = np.concatenate([wa, wb], axis=0)
        else:
            core = np.zeros((ra0 + rb0, n, n, ra1 + rb1), dtype=complex)
            core[:ra0, :, :, :ra1] = wa
            core[ra0:, :, :, ra1:] = wb
        cores.append(core)
    return TensorTrainOperator(cores=tuple(cores))


def operator_scale(a: TensorTrainOperator, scalar: complex) -> TensorTrainOperator:
    cores = list(a.cores)
    cores[0] = cores[0] * scalar
    return TensorTrainOperator(cores=tuple(cores))


def local_operator(mode_dims: Sequence[int], factors: dict) -> TensorTrainOperator:
    """Rank-1 operator with the given {site: matrix} factors and identities elsewhere."""
    matrices = [np.asarray(factors.get(i, np.eye(n)), dtype=complex) for i, n in enumerate(mode_dims)]
    return TensorTrainOperator.from_product(matrices)


def max_bond_ranks(mode_dims: Sequence[int], rank: int) -> Tuple[int, ...]:
    """Ranks (r_0..r_d) capped by rank and by the dimension products on either side."""
    d = len(mode_dims)
    ranks = [1]
    for i in range(1, d):
        left = math.prod(int(n) for n in mode_dims[:i])
        right = math.prod(int(n) for n in mode_dims[i:])
        ranks.append(min(rank, left, right))
    ranks.append(1)
    return tuple(ranks)
